#include "markov_panel/gof_bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "markov_panel/errors.hpp"

namespace markov_panel {

std::string to_string(DistanceVariant v) { return v == DistanceVariant::Pmf ? "pmf" : "cdf"; }

DistanceVariant distance_variant_from_string(const std::string &name) {
    if (name == "pmf")
        return DistanceVariant::Pmf;
    if (name == "cdf")
        return DistanceVariant::Cdf;
    throw Error("unknown distance variant '" + name + "' (expected pmf or cdf)");
}

double geometric_mle(std::span<const int> durations) {
    if (durations.empty())
        throw EmptySample("no completed holding spells");
    double sum = 0.0;
    for (int d : durations)
        sum += d;
    return 1.0 / (1.0 + sum / static_cast<double>(durations.size()));
}

double fitted_pmf(double p, int n) { return std::pow(1.0 - p, n) * p; }

double fitted_cdf(double p, int n) {
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += fitted_pmf(p, j);
    return total;
}

double distance_statistic(std::span<const int> durations, double p, DistanceVariant variant) {
    if (durations.empty())
        throw EmptySample("no completed holding spells");
    const int max_n = *std::max_element(durations.begin(), durations.end());
    const double k = static_cast<double>(durations.size());

    std::vector<double> freq(static_cast<std::size_t>(max_n) + 1, 0.0);
    for (int d : durations)
        freq[static_cast<std::size_t>(d)] += 1.0 / k;

    double sup = 0.0;
    if (variant == DistanceVariant::Pmf) {
        for (int n = 1; n <= max_n; ++n)
            sup = std::max(sup, std::abs(freq[static_cast<std::size_t>(n)] - fitted_pmf(p, n)));
    } else {
        double empirical = 0.0;
        double fitted = 0.0;
        for (int n = 0; n <= max_n; ++n) {
            empirical += freq[static_cast<std::size_t>(n)];
            if (n >= 1)
                fitted += fitted_pmf(p, n);
            sup = std::max(sup, std::abs(empirical - fitted));
        }
    }
    return std::sqrt(k) * sup;
}

double distance_statistic(std::span<const int> durations, DistanceVariant variant) {
    return distance_statistic(durations, geometric_mle(durations), variant);
}

std::vector<int> sample_holding_times(double p, std::size_t k, Rng &rng) {
    std::geometric_distribution<int> failures(p);
    std::vector<int> out(k);
    for (auto &x : out)
        x = 1 + failures(rng.engine());
    return out;
}

double bootstrap_p_value(std::span<const double> k_boot, double k_star) {
    if (k_boot.empty())
        return 0.0;
    const auto hits = std::count_if(k_boot.begin(), k_boot.end(), [&](double x) { return x >= k_star; });
    return static_cast<double>(hits) / static_cast<double>(k_boot.size());
}

GofResult parametric_bootstrap(std::span<const int> durations, std::size_t m_reps, double alpha,
                               DistanceVariant variant, std::uint64_t seed, State state) {
    if (durations.empty())
        throw EmptySample("no completed holding spells for state " + std::string(1, symbol(state)));
    if (m_reps < 1)
        throw Error("bootstrap needs at least one replicate");

    GofResult result;
    result.state = state;
    result.variant = variant;
    result.k = durations.size();
    result.p_hat = geometric_mle(durations);
    result.k_star = distance_statistic(durations, result.p_hat, variant);
    result.m_reps = m_reps;
    result.alpha = alpha;
    result.seed = seed;

    const Rng master(seed);
    result.k_boot.resize(m_reps);
    for (std::size_t m = 0; m < m_reps; ++m) {
        Rng rng = master.split(m);
        const std::vector<int> resample = sample_holding_times(result.p_hat, result.k, rng);
        result.k_boot[m] = distance_statistic(resample, geometric_mle(resample), variant);
    }
    result.p_value = bootstrap_p_value(result.k_boot, result.k_star);
    result.reject = result.p_value <= alpha;
    return result;
}

} // namespace markov_panel
