#pragma once

#include <cmath>
#include <cstdint>

namespace collab {

/// Seed plus 64-bit substream index for the counter-based generator.
///
/// Substream derivation rule (collision-free by construction): the 64-bit
/// stream packs  [purpose : 8 bits | trial : 32 bits | agent : 24 bits],
/// so distinct (purpose, trial, agent) triplets always map to distinct
/// streams. Experiment-level draws (covariance synthesis, mask draws, ...)
/// use trial = 0; the purpose byte keeps them disjoint from per-trial data.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

enum class StreamPurpose : std::uint64_t {
    Covariance = 1,
    Theta = 2,
    Masks = 3,
    AgentData = 4,
    Unlabeled = 5,
    FreshData = 6,
    MonteCarlo = 7,
    TestSplit = 8,
};

inline RngSeed substream(RngSeed base, StreamPurpose purpose, std::uint64_t trial = 0,
                         std::uint64_t agent = 0) {
    const std::uint64_t stream = (static_cast<std::uint64_t>(purpose) << 56) |
                                 ((trial & 0xFFFFFFFFull) << 24) | (agent & 0xFFFFFFull);
    return RngSeed{base.seed, base.stream ^ stream};
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
///
/// State is a 128-bit counter keyed by the 64-bit seed; the high 64 bits of
/// the counter hold the substream index, the low 64 bits the block position.
/// Identical (seed, stream) therefore reproduce the identical sequence on
/// any platform, and skipping between substreams is free. Gaussian variates
/// use the trigonometric Box-Muller transform, so streams of doubles are
/// reproducible up to the platform's libm (bit-identical on a fixed toolchain).
class Philox {
  public:
    using result_type = std::uint64_t;

    explicit Philox(RngSeed s) : key0_(static_cast<std::uint32_t>(s.seed)),
                                 key1_(static_cast<std::uint32_t>(s.seed >> 32)),
                                 stream_(s.stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    std::uint64_t next_u64() {
        if (have_ == 0) {
            generate_block();
            have_ = 2;
        }
        --have_;
        return out_[1 - have_];
    }

    result_type operator()() { return next_u64(); }

    /// Uniform on [0, 1): 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]: never returns exactly zero.
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Unbiased uniform integer in [0, bound) by rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % bound;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

  private:
    static void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    void generate_block() {
        constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
        constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
        std::uint32_t c0 = static_cast<std::uint32_t>(pos_);
        std::uint32_t c1 = static_cast<std::uint32_t>(pos_ >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
        std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mul_hilo(kM0, c0, hi0, lo0);
            mul_hilo(kM1, c2, hi1, lo1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            c1 = lo1;
            c3 = lo0;
            c0 = n0;
            c2 = n2;
            k0 += kW0;
            k1 += kW1;
        }
        out_[0] = (static_cast<std::uint64_t>(c1) << 32) | c0;
        out_[1] = (static_cast<std::uint64_t>(c3) << 32) | c2;
        ++pos_;
    }

    std::uint32_t key0_, key1_;
    std::uint64_t stream_;
    std::uint64_t pos_ = 0;
    std::uint64_t out_[2] = {0, 0};
    int have_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace collab
