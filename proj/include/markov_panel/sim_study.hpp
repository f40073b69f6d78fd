#ifndef MARKOV_PANEL_SIM_STUDY_HPP
#define MARKOV_PANEL_SIM_STUDY_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "markov_panel/estimation_bayes.hpp"
#include "markov_panel/random.hpp"
#include "markov_panel/state_model.hpp"

namespace markov_panel {

/// Uniform draw from the parameter set by rejection from [0,1]^5.
/// `attempts`, when given, receives the number of cube draws used.
ThetaParams sample_theta_uniform(Rng &rng, std::size_t *attempts = nullptr);
ThetaParams sample_theta_uniform(std::uint64_t seed);

enum class MatrixNorm { Frobenius, Spectral };

std::string to_string(MatrixNorm norm);

/// Norm of q_true - q_est: Frobenius sqrt(trace(A^T A)) or the largest singular value.
template <typename DerivedA, typename DerivedB>
double matrix_error(const Eigen::MatrixBase<DerivedA> &q_true, const Eigen::MatrixBase<DerivedB> &q_est,
                    MatrixNorm norm) {
    const Eigen::MatrixXd diff = (q_true - q_est).template cast<double>();
    if (norm == MatrixNorm::Frobenius)
        return diff.norm();
    return Eigen::JacobiSVD<Eigen::MatrixXd>(diff).singularValues()(0);
}

struct StudyConfig {
    std::size_t n_reps = 200;
    std::size_t n_parcels = 43;
    std::size_t n_years = 22;
    /// Template for the per-replicate sampler; seed and theta_init are set per replicate.
    McmcConfig mcmc{0.03, 100000, 10000, 0, ThetaVector<double>::Zero()};
    std::uint64_t seed = 0;
    /// Use this theta for every replicate instead of sampling it.
    std::optional<ThetaParams> fixed_theta;
    unsigned n_threads = 1;
};

struct ReplicateRecord {
    std::size_t index = 0;
    ThetaVector<double> theta_true = ThetaVector<double>::Zero();
    ThetaVector<double> theta_mle = ThetaVector<double>::Zero();
    ThetaVector<double> theta_bayes = ThetaVector<double>::Zero();
    double err_mle_fro = 0;
    double err_bayes_fro = 0;
    double err_mle_2 = 0;
    double err_bayes_2 = 0;
    double acceptance_rate = 0;
    bool skipped = false;
    std::string skip_reason;
};

struct StudyResult {
    StudyConfig config;
    std::vector<ReplicateRecord> records; // ordered by replicate index

    std::size_t n_skipped() const;
    /// Errors of the non-skipped replicates, paired by position.
    std::vector<double> errors_mle(MatrixNorm norm) const;
    std::vector<double> errors_bayes(MatrixNorm norm) const;
};

/// Per replicate: draw theta, simulate an N x P panel, fit the MLE and the
/// Jeffreys-prior posterior mean, and record both errors in both norms.
/// Replicates whose counts are degenerate are recorded as skipped.
StudyResult run_study(const StudyConfig &config);

/// One replicate of run_study, a pure function of (config, index).
ReplicateRecord run_replicate(const StudyConfig &config, std::size_t index);

// ---------------------------------------------------------------------------
// Two-state prior comparison.

struct TwoStateStudyConfig {
    double p = 0.1; // P(0 -> 1)
    double q = 0.1; // P(1 -> 0)
    std::size_t chain_length = 20; // transitions per chain
    std::size_t n_reps = 500;
    BasicMcmcConfig<2> mcmc{0.1, 20000, 2000, 0, Eigen::Vector2d::Zero()};
    std::uint64_t seed = 0;
};

/// Absolute errors |p_est - p| and |q_est - q| per replicate and prior.
struct TwoStateStudyResult {
    TwoStateStudyConfig config;
    std::vector<Eigen::Vector2d> err_uniform;
    std::vector<Eigen::Vector2d> err_beta;
    std::vector<Eigen::Vector2d> err_jeffreys;

    /// Mean over replicates of the absolute errors, per parameter.
    static Eigen::Vector2d mean_abs_error(const std::vector<Eigen::Vector2d> &errors);
};

/// Chain of `chain_length` transitions started from the stationary law.
TwoStateCounts simulate_two_state_counts(double p, double q, std::size_t chain_length, Rng &rng);

/// Posterior mean of (p, q) under the two-state Jeffreys prior, by MCMC.
Eigen::Vector2d two_state_jeffreys_estimate(const TwoStateCounts &counts,
                                            const BasicMcmcConfig<2> &mcmc);

TwoStateStudyResult run_two_state_study(const TwoStateStudyConfig &config);

// ---------------------------------------------------------------------------
// Paired comparisons and histograms.

struct PairedTest {
    std::size_t wins = 0;   // candidate strictly smaller
    std::size_t losses = 0; // candidate strictly larger
    std::size_t ties = 0;
    double p_value = 1.0;
};

/// One-sided sign test of H1: candidate < reference (ties dropped).
PairedTest sign_test_less(std::span<const double> candidate, std::span<const double> reference);

/// One-sided Wilcoxon signed-rank test of H1: candidate < reference, normal
/// approximation with tie correction.
PairedTest signed_rank_test_less(std::span<const double> candidate, std::span<const double> reference);

struct Histogram {
    std::vector<double> edges;     // n_bins + 1
    std::vector<double> densities; // n_bins, sum(density * width) = 1
};

/// Density-normalized histogram over [min, max] (a unit-width window when all samples coincide).
Histogram empirical_pdf(std::span<const double> samples, std::size_t n_bins);

double median(std::vector<double> values);

} // namespace markov_panel

#endif
