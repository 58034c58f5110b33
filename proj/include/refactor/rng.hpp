#pragma once

#include <cstdint>
#include <vector>

#include "refactor/normal.hpp"

namespace refactor {

/// Seed plus stream id. Identical (seed, stream_id) pairs reproduce the
/// same draws bit for bit; distinct stream ids give statistically
/// independent sequences for parallel replications.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    RngSpec with_stream(std::uint64_t stream) const { return RngSpec{seed, stream}; }
};

/// PCG32 (O'Neill): 64-bit LCG state, xorshift-rotate output, one stream
/// per odd increment. Chosen over std::mt19937 because the C++ standard
/// does not pin down distribution outputs, while pcg32 plus an explicit
/// inverse-CDF normal is reproducible everywhere.
class Pcg32 {
  public:
    explicit Pcg32(RngSpec spec) {
        state_ = 0u;
        inc_ = (spec.stream_id << 1u) | 1u;
        next_u32();
        state_ += spec.seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform draw in the open interval (0, 1) with 53-bit resolution.
    double next_uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    /// Standard normal via the inverse CDF; one uniform per draw, so the
    /// stream position is predictable.
    double next_normal() { return normal_quantile(next_uniform()); }

    /// Uniform integer in [0, bound). Rejection sampling on the low
    /// 32-bit range keeps the draw exactly uniform.
    std::uint32_t next_below(std::uint32_t bound) {
        const std::uint32_t threshold = (0u - bound) % bound;
        for (;;) {
            const std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = next_below(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace refactor
