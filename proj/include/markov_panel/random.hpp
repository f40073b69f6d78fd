#ifndef MARKOV_PANEL_RANDOM_HPP
#define MARKOV_PANEL_RANDOM_HPP

#include <cstdint>
#include <random>

namespace markov_panel {

/// SplitMix64 finalizer, used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seeded random source. Every stochastic routine takes one of these (or a seed)
/// explicitly; `split(i)` yields the i-th child stream, a pure function of
/// (seed, i), so replicates can be generated in any order.
class Rng {
  public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

    std::uint64_t seed() const { return seed_; }

    Rng split(std::uint64_t stream) const { return Rng(mix_seed(seed_ ^ mix_seed(stream + 1))); }

    /// Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double normal(double mean = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

    engine_type &engine() { return engine_; }

  private:
    std::uint64_t seed_;
    engine_type engine_;
};

} // namespace markov_panel

#endif
