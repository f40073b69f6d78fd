#ifndef MARKOV_PANEL_CHAIN_ANALYSIS_HPP
#define MARKOV_PANEL_CHAIN_ANALYSIS_HPP

#include <Eigen/Dense>

#include <vector>

#include "markov_panel/state_model.hpp"

namespace markov_panel {

using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

/// Law of the first hitting time tau = inf{n >= 1 : X_n = target | X_0 = source},
/// truncated at `horizon`. f[n-1] holds P(tau = n).
struct FirstPassagePmf {
    Eigen::Index source = 0;
    Eigen::Index target = 0;
    int horizon = 0;
    std::vector<double> f;

    double operator()(int n) const { return f.at(static_cast<std::size_t>(n - 1)); }
    double total_mass() const;
    /// sum_{n <= horizon} n f(n)
    double truncated_mean() const;
    /// Smallest n with P(tau <= n) >= 0.5, or 0 when the horizon is too short.
    int median() const;
};

/// Renewal recurrence:
///   f(1) = Q(s,t),  f(n) = Q^n(s,t) - sum_{k=1}^{n-1} f(k) Q^{n-k}(t,t).
/// Works for any square stochastic matrix.
FirstPassagePmf first_passage_pmf(const MatrixRef &q, Eigen::Index source, Eigen::Index target,
                                  int horizon);

inline FirstPassagePmf first_passage_pmf(const TransitionMatrix &q, State source, State target,
                                         int horizon) {
    return first_passage_pmf(MatrixRef(q), index(source), index(target), horizon);
}

/// P(tau > horizon): mass still outside `target` after `horizon` steps of the
/// chain killed on entering `target`.
double survival_mass(const MatrixRef &q, Eigen::Index source, Eigen::Index target, int horizon);

/// Probability of ever hitting `target` from `source` is 1 iff every state
/// reachable from `source` (avoiding target) can itself reach `target`.
bool hits_almost_surely(const MatrixRef &q, Eigen::Index source, Eigen::Index target);

/// E[tau] from E_e = 1 + sum_{e' != target} Q(e,e') E_{e'} on the transient states.
/// Throws Unreachable when the hitting probability is below one.
double hitting_time_mean(const MatrixRef &q, Eigen::Index source, Eigen::Index target);

inline double hitting_time_mean(const TransitionMatrix &q, State source, State target) {
    return hitting_time_mean(MatrixRef(q), index(source), index(target));
}

/// Median of tau from the first-passage law. Throws Unreachable.
int hitting_time_median(const MatrixRef &q, Eigen::Index source, Eigen::Index target,
                        int horizon = 5000);

struct QuasiStationary {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero(); // over F, C, J
    double lambda = 0;                            // spectral radius of the F/C/J block
};

/// Normalized nonnegative left eigenvector of the F/C/J block at its spectral
/// radius. F is never re-entered, so the eigenvalues are Q(F,F) and those of
/// the 2x2 C/J block, which are obtained in closed form.
/// Throws DegenerateBlock when the eigenvector is not unique.
QuasiStationary quasi_stationary(const TransitionMatrix &q);

/// mu_n(e) = P(X_n = e | X_n != B, X_0 = F) for e in F, C, J.
/// Throws DegenerateBlock when the chain is absorbed with certainty by step n.
Eigen::Vector3d quasi_stationary_by_iteration(const TransitionMatrix &q, int n_steps);

} // namespace markov_panel

#endif
