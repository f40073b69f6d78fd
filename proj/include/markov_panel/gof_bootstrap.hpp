#ifndef MARKOV_PANEL_GOF_BOOTSTRAP_HPP
#define MARKOV_PANEL_GOF_BOOTSTRAP_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "markov_panel/random.hpp"
#include "markov_panel/state_model.hpp"

namespace markov_panel {

// Holding-time goodness of fit against the geometric law f_p(n) = (1-p)^n p.

enum class DistanceVariant { Pmf, Cdf };

std::string to_string(DistanceVariant v);
DistanceVariant distance_variant_from_string(const std::string &name);

/// p = 1 / (1 + mean(durations)). Throws EmptySample.
double geometric_mle(std::span<const int> durations);

/// (1-p)^n p
double fitted_pmf(double p, int n);

/// sum_{j=1}^{n} fitted_pmf(p, j); tends to 1 - p, not 1.
double fitted_cdf(double p, int n);

/// sqrt(k) * sup |empirical - fitted| over the observed range:
///   Pmf: n = 1..max, empirical frequency vs fitted_pmf
///   Cdf: n = 0..max, empirical CDF vs fitted_cdf
double distance_statistic(std::span<const int> durations, double p, DistanceVariant variant);

/// Same, with p refitted from the durations.
double distance_statistic(std::span<const int> durations, DistanceVariant variant);

struct GofResult {
    State state = State::F;
    DistanceVariant variant = DistanceVariant::Pmf;
    double p_hat = 0;
    std::size_t k = 0;
    double k_star = 0;
    std::vector<double> k_boot;
    double p_value = 0;
    std::size_t m_reps = 0;
    double alpha = 0.05;
    bool reject = false;
    std::uint64_t seed = 0;
};

/// k i.i.d. draws from the geometric law on n >= 1, P(S = n) = (1-p)^{n-1} p.
std::vector<int> sample_holding_times(double p, std::size_t k, Rng &rng);

/// Parametric bootstrap: K* on the data; for m = 1..M resample k values from the
/// fitted law, refit p and compute K^m; rho = #{K^m >= K*} / M; reject iff rho <= alpha.
/// Replicate m uses stream m of `seed`. Throws EmptySample.
GofResult parametric_bootstrap(std::span<const int> durations, std::size_t m_reps, double alpha,
                               DistanceVariant variant, std::uint64_t seed,
                               State state = State::F);

/// Bootstrap p-value recomputed from stored replicates.
double bootstrap_p_value(std::span<const double> k_boot, double k_star);

} // namespace markov_panel

#endif
