#pragma once

// Seeded RNG wrapper. mt19937_64 is fully specified by the standard, so
// streams are bit-identical across platforms; we avoid std distributions
// (which are not) and convert to doubles explicitly.

#include <cstdint>
#include <random>

namespace spinbath {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is < 2^-64 * n, irrelevant at our sample counts
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(gen_()) * n) >> 64);
    }

  private:
    std::mt19937_64 gen_;
};

// stream seed for sub-task i of a master seed (used where plain seed^i
// would collide, e.g. nested per-field / per-configuration streams)
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace spinbath
