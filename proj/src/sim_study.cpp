#include "markov_panel/sim_study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "markov_panel/errors.hpp"
#include "markov_panel/estimation_mle.hpp"
#include "markov_panel/panel_io.hpp"

namespace markov_panel {

ThetaParams sample_theta_uniform(Rng &rng, std::size_t *attempts) {
    std::size_t tries = 0;
    ThetaVector<double> v;
    do {
        ++tries;
        for (int i = 0; i < kNumParams; ++i)
            v(i) = rng.uniform();
    } while (v(0) + v(1) > 1 || v(2) + v(3) > 1);
    if (attempts)
        *attempts = tries;
    return validate_theta(v);
}

ThetaParams sample_theta_uniform(std::uint64_t seed) {
    Rng rng(seed);
    return sample_theta_uniform(rng);
}

std::string to_string(MatrixNorm norm) { return norm == MatrixNorm::Frobenius ? "frobenius" : "two_norm"; }

std::size_t StudyResult::n_skipped() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const ReplicateRecord &r) { return r.skipped; }));
}

std::vector<double> StudyResult::errors_mle(MatrixNorm norm) const {
    std::vector<double> out;
    for (const auto &r : records)
        if (!r.skipped)
            out.push_back(norm == MatrixNorm::Frobenius ? r.err_mle_fro : r.err_mle_2);
    return out;
}

std::vector<double> StudyResult::errors_bayes(MatrixNorm norm) const {
    std::vector<double> out;
    for (const auto &r : records)
        if (!r.skipped)
            out.push_back(norm == MatrixNorm::Frobenius ? r.err_bayes_fro : r.err_bayes_2);
    return out;
}

ReplicateRecord run_replicate(const StudyConfig &config, std::size_t index) {
    Rng rng = Rng(config.seed).split(index);
    ReplicateRecord rec;
    rec.index = index;
    const ThetaParams truth = config.fixed_theta ? *config.fixed_theta : sample_theta_uniform(rng);
    rec.theta_true = truth.vector();
    const std::uint64_t panel_seed = rng.engine()();
    const std::uint64_t mcmc_seed = rng.engine()();

    const ParcelPanel panel = simulate_panel(truth, config.n_years, config.n_parcels, panel_seed);
    const TransitionCounts counts = count_transitions(panel);
    std::optional<MleResult> fit;
    try {
        fit = mle(counts);
    } catch (const DegenerateCounts &e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
        return rec;
    }
    rec.theta_mle = fit->theta_hat.vector();

    McmcConfig mcmc = config.mcmc;
    mcmc.seed = mcmc_seed;
    mcmc.theta_init = interior_start(fit->theta_hat).vector();
    const PriorSpec prior{PriorKind::Jeffreys, config.n_years, config.n_parcels};
    const McmcTrace trace = sample_posterior(counts, prior, mcmc);
    const ThetaParams bayes = bayes_estimate(trace);
    rec.theta_bayes = bayes.vector();
    rec.acceptance_rate = trace.acceptance_rate;

    const TransitionMatrix q_true = build_matrix(truth);
    const TransitionMatrix q_mle = build_matrix(fit->theta_hat);
    const TransitionMatrix q_bayes = build_matrix(bayes);
    rec.err_mle_fro = matrix_error(q_true, q_mle, MatrixNorm::Frobenius);
    rec.err_bayes_fro = matrix_error(q_true, q_bayes, MatrixNorm::Frobenius);
    rec.err_mle_2 = matrix_error(q_true, q_mle, MatrixNorm::Spectral);
    rec.err_bayes_2 = matrix_error(q_true, q_bayes, MatrixNorm::Spectral);
    return rec;
}

StudyResult run_study(const StudyConfig &config) {
    if (config.n_reps < 1)
        throw Error("study needs at least one replicate");
    config.mcmc.validate();
    StudyResult result;
    result.config = config;
    result.records.resize(config.n_reps);

    const unsigned workers = std::max(1u, std::min<unsigned>(config.n_threads, static_cast<unsigned>(config.n_reps)));
    if (workers == 1) {
        for (std::size_t i = 0; i < config.n_reps; ++i)
            result.records[i] = run_replicate(config, i);
        return result;
    }
    // Strided assignment; each record is written by exactly one worker.
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < config.n_reps; i += workers)
                result.records[i] = run_replicate(config, i);
        });
    for (auto &t : pool)
        t.join();
    return result;
}

// ---------------------------------------------------------------------------

Eigen::Vector2d TwoStateStudyResult::mean_abs_error(const std::vector<Eigen::Vector2d> &errors) {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto &e : errors)
        sum += e;
    return errors.empty() ? sum : Eigen::Vector2d(sum / static_cast<double>(errors.size()));
}

TwoStateCounts simulate_two_state_counts(double p, double q, std::size_t chain_length, Rng &rng) {
    TwoStateCounts c;
    int x = rng.uniform() < q / (p + q) ? 0 : 1;
    for (std::size_t n = 0; n < chain_length; ++n) {
        const double u = rng.uniform();
        const int y = x == 0 ? (u < p ? 1 : 0) : (u < q ? 0 : 1);
        if (x == 0)
            ++(y == 0 ? c.n00 : c.n01);
        else
            ++(y == 0 ? c.n10 : c.n11);
        x = y;
    }
    return c;
}

Eigen::Vector2d two_state_jeffreys_estimate(const TwoStateCounts &counts, const BasicMcmcConfig<2> &mcmc) {
    const std::function<double(const Eigen::Vector2d &)> target = [&](const Eigen::Vector2d &pq) {
        const double prior = two_state_jeffreys_log_prior(pq);
        if (prior == -std::numeric_limits<double>::infinity())
            return prior;
        return two_state_log_likelihood(pq, counts) + prior;
    };
    BasicMcmcConfig<2> config = mcmc;
    if (!std::isfinite(target(config.theta_init))) {
        const TwoStateEstimates closed = two_state_estimators(counts);
        config.theta_init = Eigen::Vector2d(closed.p_beta, closed.q_beta);
    }
    return sample_mean(metropolis_hastings<2>(target, config));
}

TwoStateStudyResult run_two_state_study(const TwoStateStudyConfig &config) {
    if (!(config.p > 0 && config.p < 1 && config.q > 0 && config.q < 1))
        throw Error("two-state study needs 0 < p, q < 1");
    TwoStateStudyResult result;
    result.config = config;
    const Rng master(config.seed);
    const Eigen::Vector2d truth(config.p, config.q);
    for (std::size_t r = 0; r < config.n_reps; ++r) {
        Rng rng = master.split(r);
        const TwoStateCounts counts = simulate_two_state_counts(config.p, config.q, config.chain_length, rng);
        const TwoStateEstimates closed = two_state_estimators(counts);
        BasicMcmcConfig<2> mcmc = config.mcmc;
        mcmc.seed = rng.engine()();
        mcmc.theta_init = Eigen::Vector2d(closed.p_beta, closed.q_beta);
        const Eigen::Vector2d jeffreys = two_state_jeffreys_estimate(counts, mcmc);

        result.err_uniform.push_back((Eigen::Vector2d(closed.p_uniform, closed.q_uniform) - truth).cwiseAbs());
        result.err_beta.push_back((Eigen::Vector2d(closed.p_beta, closed.q_beta) - truth).cwiseAbs());
        result.err_jeffreys.push_back((jeffreys - truth).cwiseAbs());
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {

// P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_half_upper_tail(std::size_t n, std::size_t k) {
    if (k == 0)
        return 1.0;
    if (k > n)
        return 0.0;
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    double total = 0.0;
    for (std::size_t j = k; j <= n; ++j) {
        const double log_choose = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(j) + 1) -
                                  std::lgamma(static_cast<double>(n - j) + 1);
        total += std::exp(log_choose + log_half_n);
    }
    return std::min(1.0, total);
}

void check_paired(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error("paired test needs samples of equal length");
}

} // namespace

PairedTest sign_test_less(std::span<const double> candidate, std::span<const double> reference) {
    check_paired(candidate, reference);
    PairedTest t;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (candidate[i] < reference[i])
            ++t.wins;
        else if (candidate[i] > reference[i])
            ++t.losses;
        else
            ++t.ties;
    }
    t.p_value = binomial_half_upper_tail(t.wins + t.losses, t.wins);
    return t;
}

PairedTest signed_rank_test_less(std::span<const double> candidate, std::span<const double> reference) {
    check_paired(candidate, reference);
    PairedTest t;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        const double d = reference[i] - candidate[i];
        if (d > 0)
            ++t.wins;
        else if (d < 0)
            ++t.losses;
        else {
            ++t.ties;
            continue;
        }
        diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n == 0)
        return t;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
    double w_plus = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]]))
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        const double group = static_cast<double>(j - i + 1);
        tie_term += group * group * group - group;
        for (std::size_t k = i; k <= j; ++k)
            if (diffs[order[k]] > 0)
                w_plus += avg_rank;
        i = j + 1;
    }
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1) / 4.0;
    const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
    if (!(var > 0))
        return t;
    const double z = (w_plus - mean - 0.5) / std::sqrt(var);
    t.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
    return t;
}

Histogram empirical_pdf(std::span<const double> samples, std::size_t n_bins) {
    if (samples.empty())
        throw EmptySample("histogram needs at least one sample");
    if (n_bins < 1)
        throw Error("histogram needs at least one bin");
    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    double lo = *min_it, hi = *max_it;
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(n_bins);

    Histogram h;
    h.edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i)
        h.edges[i] = lo + width * static_cast<double>(i);
    h.edges.back() = hi;

    std::vector<std::size_t> counts(n_bins, 0);
    for (double x : samples) {
        auto bin = static_cast<std::size_t>((x - lo) / width);
        ++counts[std::min(bin, n_bins - 1)];
    }
    h.densities.resize(n_bins);
    const double total = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < n_bins; ++i)
        h.densities[i] = static_cast<double>(counts[i]) / (total * (h.edges[i + 1] - h.edges[i]));
    return h;
}

double median(std::vector<double> values) {
    if (values.empty())
        throw EmptySample("median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

} // namespace markov_panel
