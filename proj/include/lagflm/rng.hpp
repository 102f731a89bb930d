#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace lagflm {

// Philox4x32-10 counter-based generator (Salmon et al. style constants).
// Streams are addressed by (seed, stream id triple); draws inside a stream are
// indexed by a block counter, so any draw is a pure function of its address.
// That is what makes datasets bitwise reproducible under any parallel schedule.
namespace philox {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace philox

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t s0, std::uint32_t s1, std::uint32_t s2)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_{s0, s1, s2} {}

    // Uniform on (0,1); two per Philox block.
    double next_uniform() {
        if (pending_) {
            pending_ = false;
            return make_uniform(buf_[2], buf_[3]);
        }
        buf_ = philox::block({static_cast<std::uint32_t>(block_),
                              static_cast<std::uint32_t>(block_ >> 32) ^ stream_[0],
                              stream_[1], stream_[2]},
                             key_);
        ++block_;
        pending_ = true;
        return make_uniform(buf_[0], buf_[1]);
    }

    // Standard normal via Box-Muller (no rejection, so the draw count is fixed).
    double next_normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_normal_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_normal_ = r * std::sin(6.283185307179586476925286766559 * u2);
        have_normal_ = true;
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [lo, hi] inclusive.
    long next_int(long lo, long hi) {
        const double u = next_uniform();
        long v = lo + static_cast<long>(u * static_cast<double>(hi - lo + 1));
        return v > hi ? hi : v;
    }

    // Index in [0, n).
    std::size_t next_below(std::size_t n) {
        const double u = next_uniform();
        std::size_t v = static_cast<std::size_t>(u * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

private:
    static double make_uniform(std::uint32_t a, std::uint32_t b) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(a) << 32) | b;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 3> stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    bool pending_ = false;
    bool have_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace lagflm
