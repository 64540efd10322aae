#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace arcnn {

/// Derives an engine seed from one master seed and a stream name, so that
/// unrelated consumers (weight init, shuffling, data splits) draw from
/// unrelated streams and adding a new consumer does not shift existing ones.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::string_view stream);

/// Seeded random source. All sampling transforms are hand-rolled on top of
/// std::mt19937_64 so sequences are identical across standard libraries;
/// std::normal_distribution and friends are implementation-defined and would
/// break run reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t master_seed, std::string_view stream)
        : engine_(derive_stream_seed(master_seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo,hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Unbiased integer in [0,n). n must be nonzero.
    std::uint64_t next_index(std::uint64_t n);

    /// Standard normal deviate (Box-Muller, pair-cached).
    double next_normal();

    double next_normal(double mean, double stddev) { return mean + stddev * next_normal(); }

    /// Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace arcnn
