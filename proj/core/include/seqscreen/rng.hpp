#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "seqscreen/matrix.hpp"

namespace seqscreen {

// Deterministic random source. The generator is std::mt19937_64, whose
// output sequence is fully specified by the C++ standard, so a given
// seed produces the same draws on every platform. Unit doubles are the
// top 53 bits of a draw; bounded integers use rejection sampling. None
// of the std distribution adaptors are used, since their algorithms are
// implementation defined.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // standard normal via Box-Muller; the pair is drawn eagerly so the
    // consumption order stays fixed
    double next_gaussian();

    // uniform integer in [0, n), bias-free
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable sub-seed derivation: splitmix64 over the base seed xor an
// FNV-1a hash of the label. Every pipeline stage (init, split, epoch
// shuffle, ...) draws from its own derived stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

// In-place Fisher-Yates shuffle driven by the rng.
template <typename T>
void shuffle(std::vector<T>& v, SeededRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::uint64_t j = rng.below(i);
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

// fan_out x fan_in matrix with entries i.i.d. uniform on [-L, L],
// L = sqrt(6 / (fan_in + fan_out)). Entries are drawn in row-major
// order. Zero fans are rejected.
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng);

} // namespace seqscreen
