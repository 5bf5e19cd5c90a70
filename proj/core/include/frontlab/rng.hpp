#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace frontlab {

// Counter-based generator (Philox-4x32, 10 rounds). A (seed, stream) pair
// selects an independent sequence, so replicas and worker threads can draw
// without coordination and results do not depend on scheduling order.
class Philox {
public:
    using result_type = std::uint32_t;

    Philox(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint32_t>::max(); }

    result_type operator()() {
        if (idx_ == 4) {
            block_ = generate(counter_, key_);
            advance_counter();
            idx_ = 0;
        }
        return block_[idx_++];
    }

private:
    static std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
    }

    static std::array<std::uint32_t, 4> generate(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key) {
        constexpr std::uint32_t m0 = 0xD2511F53u;
        constexpr std::uint32_t m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u;
        constexpr std::uint32_t w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint32_t hi0 = mul_hi(m0, ctr[0]);
            const std::uint32_t lo0 = m0 * ctr[0];
            const std::uint32_t hi1 = mul_hi(m1, ctr[2]);
            const std::uint32_t lo1 = m1 * ctr[2];
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }

    void advance_counter() {
        if (++counter_[0] == 0) ++counter_[1];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int idx_ = 4;
};

// Distribution layer on top of Philox. Transforms are spelled out (rather than
// delegating to std:: distributions) so that streams are reproducible across
// standard libraries.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(seed, stream) {}

    std::uint32_t next_u32() { return engine_(); }

    std::uint64_t next_u64() {
        const std::uint64_t hi = engine_();
        return (hi << 32) | engine_();
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        const double u2 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double exponential(double rate) {
        return -std::log1p(-uniform()) / rate;
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    Philox engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}
