#include "markov_panel/estimation_bayes.hpp"

#include "markov_panel/estimation_mle.hpp"

namespace markov_panel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// sum_{m=0}^{N-2} (delta_F Q^m), the expected number of visits to each state
// at the origin of an observed transition.
Eigen::RowVector4d transition_origins(const TransitionMatrix &q, std::size_t n_years) {
    Eigen::RowVector4d law = initial_law();
    Eigen::RowVector4d total = Eigen::RowVector4d::Zero();
    for (std::size_t m = 0; m + 1 < n_years; ++m) {
        total += law;
        law = (law * q).eval();
    }
    return total;
}

} // namespace

Eigen::Matrix4d expected_counts(const ThetaParams &theta, std::size_t n_years,
                                std::size_t n_parcels) {
    const TransitionMatrix q = build_matrix(theta);
    const Eigen::RowVector4d visits = static_cast<double>(n_parcels) * transition_origins(q, n_years);
    return visits.asDiagonal() * q;
}

bool strictly_interior(const ThetaVector<double> &t) {
    return (t.array() > 0).all() && 1 - t(0) - t(1) > 0 && 1 - t(2) - t(3) > 0 && 1 - t(4) > 0;
}

double fisher_pair_determinant(double e_stay, double stay, double e_first, double t_first,
                               double e_second, double t_second) {
    const double s = e_stay / (stay * stay);
    const double a = e_first / (t_first * t_first);
    const double b = e_second / (t_second * t_second);
    // (s + a)(s + b) - s^2 without the cancellation.
    return s * (a + b) + a * b;
}

FisherBlocks fisher_blocks(const ThetaParams &theta, std::size_t n_years, std::size_t n_parcels) {
    const auto &t = theta.vector();
    if (!strictly_interior(t))
        throw BoundaryTheta("Jeffreys prior is undefined on the boundary of the parameter set");
    const Eigen::Matrix4d e = expected_counts(theta, n_years, n_parcels);
    constexpr int F = index(State::F), C = index(State::C), J = index(State::J),
                  B = index(State::B);

    FisherBlocks blocks;
    blocks.det_a12 = fisher_pair_determinant(e(F, F), 1 - t(0) - t(1), e(F, C), t(0), e(F, J), t(1));
    blocks.det_a34 = fisher_pair_determinant(e(C, C), 1 - t(2) - t(3), e(C, J), t(2), e(C, B), t(3));
    blocks.a5 = e(J, J) / ((1 - t(4)) * (1 - t(4))) + e(J, C) / (t(4) * t(4));
    return blocks;
}

double jeffreys_log_prior(const ThetaParams &theta, std::size_t n_years, std::size_t n_parcels) {
    const FisherBlocks b = fisher_blocks(theta, n_years, n_parcels);
    return 0.5 * (std::log(b.det_a12) + std::log(b.det_a34) + std::log(b.a5));
}

double log_posterior(const ThetaVector<double> &theta, const TransitionCounts &counts,
                     const PriorSpec &prior) {
    if (!in_parameter_set(theta))
        return kNegInf;
    const double ll = log_likelihood(theta, counts);
    if (ll == kNegInf)
        return kNegInf;
    switch (prior.kind) {
    case PriorKind::Uniform:
        return ll;
    case PriorKind::Jeffreys:
        if (!strictly_interior(theta))
            return kNegInf;
        return ll + jeffreys_log_prior(validate_theta(theta), prior.n_years, prior.n_parcels);
    }
    return kNegInf;
}

ThetaParams bayes_estimate(const McmcTrace &trace) {
    ThetaVector<double> mean = sample_mean(trace);
    // The mean of points of a convex set stays in it; only rounding can push a
    // constrained pair past 1.
    mean = mean.cwiseMax(0.0).cwiseMin(1.0);
    for (int k : {0, 2}) {
        const double sum = mean(k) + mean(k + 1);
        if (sum > 1)
            mean.segment<2>(k) /= sum;
    }
    return validate_theta(mean);
}

ThetaParams interior_start(const ThetaParams &theta, double floor) {
    ThetaVector<double> v = theta.vector().cwiseMax(floor).cwiseMin(1 - floor);
    for (int k : {0, 2}) {
        const double sum = v(k) + v(k + 1);
        if (sum > 1 - floor)
            v.segment<2>(k) *= (1 - floor) / sum;
    }
    return validate_theta(v);
}

McmcTrace sample_posterior(const TransitionCounts &counts, const PriorSpec &prior,
                           const McmcConfig &config) {
    const std::function<double(const ThetaVector<double> &)> target =
        [&](const ThetaVector<double> &t) { return log_posterior(t, counts, prior); };
    return metropolis_hastings<kNumParams>(target, config);
}

TwoStateEstimates two_state_estimators(const TwoStateCounts &c) {
    if (c.n00 < 0 || c.n01 < 0 || c.n10 < 0 || c.n11 < 0)
        throw DegenerateCounts("two-state counts must be nonnegative");
    const auto d = [](std::int64_t x) { return static_cast<double>(x); };
    TwoStateEstimates e;
    e.p_uniform = (d(c.n01) + 1) / (d(c.n01) + d(c.n00) + 2);
    e.q_uniform = (d(c.n10) + 1) / (d(c.n10) + d(c.n11) + 2);
    e.p_beta = (d(c.n01) + 0.5) / (d(c.n01) + d(c.n00) + 1);
    e.q_beta = (d(c.n10) + 0.5) / (d(c.n10) + d(c.n11) + 1);
    if (c.n00 + c.n01 > 0)
        e.p_mle = d(c.n01) / d(c.n00 + c.n01);
    if (c.n10 + c.n11 > 0)
        e.q_mle = d(c.n10) / d(c.n10 + c.n11);
    return e;
}

std::pair<double, double> two_state_mle(const TwoStateCounts &counts) {
    const TwoStateEstimates e = two_state_estimators(counts);
    if (!e.p_mle && !e.q_mle)
        throw DegenerateCounts("no transitions out of state 0 or state 1 (p and q unidentifiable)",
                               {0, 1});
    if (!e.p_mle)
        throw DegenerateCounts("no transitions out of state 0 (p unidentifiable)", {0});
    if (!e.q_mle)
        throw DegenerateCounts("no transitions out of state 1 (q unidentifiable)", {1});
    return {*e.p_mle, *e.q_mle};
}

double two_state_log_likelihood(const Eigen::Vector2d &pq, const TwoStateCounts &c) {
    const double p = pq(0), q = pq(1);
    if (!(p >= 0 && p <= 1 && q >= 0 && q <= 1))
        return kNegInf;
    double total = 0.0;
    const auto term = [&](std::int64_t n, double prob) {
        if (n == 0)
            return true;
        if (prob <= 0)
            return false;
        total += static_cast<double>(n) * std::log(prob);
        return true;
    };
    if (!term(c.n00, 1 - p) || !term(c.n01, p) || !term(c.n10, q) || !term(c.n11, 1 - q))
        return kNegInf;
    return total;
}

double two_state_jeffreys_log_prior(const Eigen::Vector2d &pq) {
    const double p = pq(0), q = pq(1);
    if (!(p > 0 && p < 1 && q > 0 && q < 1))
        return kNegInf;
    const double mu0 = q / (p + q);
    const double mu1 = p / (p + q);
    return 0.5 * (std::log(mu0) + std::log(mu1) - std::log(p * (1 - p)) - std::log(q * (1 - q)));
}

} // namespace markov_panel
