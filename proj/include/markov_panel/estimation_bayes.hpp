#ifndef MARKOV_PANEL_ESTIMATION_BAYES_HPP
#define MARKOV_PANEL_ESTIMATION_BAYES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "markov_panel/errors.hpp"
#include "markov_panel/panel_io.hpp"
#include "markov_panel/random.hpp"
#include "markov_panel/state_model.hpp"

namespace markov_panel {

/// Expected pooled transition counts for P parcels observed over N years:
///   E[n(e,e')] = P * Q(e,e') * sum_{m=0}^{N-2} Q^m(F,e)
/// i.e. the exact expectation of count_transitions on a simulated panel.
Eigen::Matrix4d expected_counts(const ThetaParams &theta, std::size_t n_years,
                                std::size_t n_parcels);

/// Determinant of one 2x2 Fisher block for a row with two free exits:
///   (s + e1/t1^2)(s + e2/t2^2) - s^2,  s = e_stay / stay^2
/// where e_* are expected counts and stay = 1 - t1 - t2.
double fisher_pair_determinant(double e_stay, double stay, double e_first, double t_first,
                               double e_second, double t_second);

/// Blocks of the Fisher information determinant at theta for a P x N design.
struct FisherBlocks {
    double det_a12 = 0; // (theta1, theta2) block
    double det_a34 = 0; // (theta3, theta4) block
    double a5 = 0;
};

/// Throws BoundaryTheta unless theta is strictly inside the parameter set.
FisherBlocks fisher_blocks(const ThetaParams &theta, std::size_t n_years, std::size_t n_parcels);

/// Unnormalized log Jeffreys prior, 0.5 * log(det A12 * det A34 * a5).
/// Throws BoundaryTheta unless theta is strictly inside the parameter set.
double jeffreys_log_prior(const ThetaParams &theta, std::size_t n_years, std::size_t n_parcels);

/// True when every theta_i, 1 - theta1 - theta2, 1 - theta3 - theta4 and 1 - theta5 are > 0.
bool strictly_interior(const ThetaVector<double> &theta);

enum class PriorKind { Uniform, Jeffreys };

struct PriorSpec {
    PriorKind kind = PriorKind::Jeffreys;
    // Design the Jeffreys prior is computed for; ignored by the uniform prior.
    std::size_t n_years = 0;
    std::size_t n_parcels = 0;
};

/// log L(theta) + log prior(theta), up to a constant. -infinity outside the
/// parameter set, and on its boundary for the Jeffreys prior.
double log_posterior(const ThetaVector<double> &theta, const TransitionCounts &counts,
                     const PriorSpec &prior);

// ---------------------------------------------------------------------------
// Random-walk Metropolis-Hastings

template <int Dim> struct BasicMcmcConfig {
    using vector_type = Eigen::Matrix<double, Dim, 1>;

    double proposal_sigma = 0.01;
    std::size_t n_iterations = 200000;
    std::size_t burn_in = 20000;
    std::uint64_t seed = 0;
    vector_type theta_init = vector_type::Zero();

    void validate() const {
        if (!(proposal_sigma > 0) || !std::isfinite(proposal_sigma))
            throw Error("proposal sigma must be positive");
        if (burn_in >= n_iterations)
            throw Error("burn-in must be smaller than the number of iterations");
    }
};

template <int Dim> struct BasicMcmcTrace {
    using vector_type = Eigen::Matrix<double, Dim, 1>;

    /// Chain states after each iteration past the burn-in.
    std::vector<vector_type> samples;
    /// Incremental mean of `samples`.
    vector_type running_mean = vector_type::Zero();
    /// Incremental mean of the whole chain including the initial state and burn-in.
    vector_type running_mean_all = vector_type::Zero();
    std::size_t n_proposals = 0;
    std::size_t n_accepted = 0;
    double acceptance_rate = 0;
};

/// Gaussian random walk: proposal = current + N(0, sigma^2 I); accept with
/// probability min(1, exp(target(proposal) - target(current))). Proposals with
/// target -infinity are always rejected. The trace is a pure function of
/// (target, config).
template <int Dim>
BasicMcmcTrace<Dim>
metropolis_hastings(const std::function<double(const Eigen::Matrix<double, Dim, 1> &)> &log_target,
                    const BasicMcmcConfig<Dim> &config) {
    using vector_type = Eigen::Matrix<double, Dim, 1>;
    config.validate();

    vector_type current = config.theta_init;
    double current_value = log_target(current);
    if (!std::isfinite(current_value))
        throw NonFiniteStart("log target is not finite at the initial state");

    BasicMcmcTrace<Dim> trace;
    trace.samples.reserve(config.n_iterations - config.burn_in);
    trace.running_mean_all = current;
    std::size_t chain_length = 1;

    Rng rng(config.seed);
    vector_type proposal;
    for (std::size_t it = 1; it <= config.n_iterations; ++it) {
        for (Eigen::Index i = 0; i < current.size(); ++i)
            proposal(i) = current(i) + rng.normal(0.0, config.proposal_sigma);
        const double u = rng.uniform();
        const double proposal_value = log_target(proposal);
        ++trace.n_proposals;
        if (proposal_value != -std::numeric_limits<double>::infinity() &&
            !std::isnan(proposal_value)) {
            const double alpha = std::min(1.0, std::exp(proposal_value - current_value));
            if (u <= alpha) {
                current = proposal;
                current_value = proposal_value;
                ++trace.n_accepted;
            }
        }

        ++chain_length;
        const double k = static_cast<double>(chain_length);
        trace.running_mean_all = (k - 1) / k * trace.running_mean_all + current / k;
        if (it > config.burn_in) {
            trace.samples.push_back(current);
            const double m = static_cast<double>(trace.samples.size());
            trace.running_mean = (m - 1) / m * trace.running_mean + current / m;
        }
    }
    trace.acceptance_rate =
        static_cast<double>(trace.n_accepted) / static_cast<double>(trace.n_proposals);
    return trace;
}

using McmcConfig = BasicMcmcConfig<kNumParams>;
using McmcTrace = BasicMcmcTrace<kNumParams>;

/// Componentwise mean of the post-burn-in samples.
template <int Dim>
Eigen::Matrix<double, Dim, 1> sample_mean(const BasicMcmcTrace<Dim> &trace) {
    if (trace.samples.empty())
        throw EmptyTrace("trace has no post-burn-in samples");
    Eigen::Matrix<double, Dim, 1> sum = Eigen::Matrix<double, Dim, 1>::Zero();
    for (const auto &s : trace.samples)
        sum += s;
    return sum / static_cast<double>(trace.samples.size());
}

/// Posterior-mean estimate. Throws EmptyTrace.
ThetaParams bayes_estimate(const McmcTrace &trace);

/// Moves theta into the interior: components floored at `floor`, and each
/// constrained pair scaled so its sum is at most 1 - floor.
ThetaParams interior_start(const ThetaParams &theta, double floor = 1e-4);

/// Bayes fit of the four-state model: MCMC on log_posterior started at `config.theta_init`.
McmcTrace sample_posterior(const TransitionCounts &counts, const PriorSpec &prior,
                           const McmcConfig &config);

// ---------------------------------------------------------------------------
// Two-state chain on {0, 1}: p = P(0 -> 1), q = P(1 -> 0).

struct TwoStateCounts {
    std::int64_t n00 = 0;
    std::int64_t n01 = 0;
    std::int64_t n10 = 0;
    std::int64_t n11 = 0;
};

struct TwoStateEstimates {
    double p_uniform = 0;
    double q_uniform = 0;
    double p_beta = 0; // beta(1/2, 1/2) prior
    double q_beta = 0;
    std::optional<double> p_mle; // empty when the row has no transitions
    std::optional<double> q_mle;
};

/// Closed-form posterior means under the uniform and beta(1/2,1/2) priors, and the MLE.
TwoStateEstimates two_state_estimators(const TwoStateCounts &counts);

/// (p_mle, q_mle). Throws DegenerateCounts when either row is empty.
std::pair<double, double> two_state_mle(const TwoStateCounts &counts);

/// (1-p)^n00 p^n01 q^n10 (1-q)^n11 in log space; -infinity outside [0,1]^2.
double two_state_log_likelihood(const Eigen::Vector2d &pq, const TwoStateCounts &counts);

/// Jeffreys prior from the expected-count Fisher information of a stationary
/// two-state chain: 0.5 * log(mu0 * mu1 / (p(1-p) q(1-q))). -infinity unless 0 < p,q < 1.
double two_state_jeffreys_log_prior(const Eigen::Vector2d &pq);

} // namespace markov_panel

#endif
