#ifndef MARKOV_PANEL_ESTIMATION_MLE_HPP
#define MARKOV_PANEL_ESTIMATION_MLE_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "markov_panel/panel_io.hpp"
#include "markov_panel/state_model.hpp"

namespace markov_panel {

/// Sum of counts(e,e') * log Q(e,e') over all cells, with 0 * log 0 = 0.
/// Returns -infinity when a positive count meets a zero probability.
double log_likelihood(const ThetaParams &theta, const TransitionCounts &counts);

/// Same as above for a raw 5-vector; -infinity outside the parameter set.
double log_likelihood(const ThetaVector<double> &theta, const TransitionCounts &counts);

/// Copy of `counts` with structurally forbidden cells zeroed, plus one warning per
/// nonzero forbidden cell.
TransitionCounts drop_forbidden(const TransitionCounts &counts, std::vector<std::string> *warnings);

/// Closed-form estimates where identifiable. A component is empty when its row
/// (F for theta1/2, C for theta3/4, J for theta5) has no outgoing transitions.
struct MleComponents {
    std::array<std::optional<double>, kNumParams> theta;
    TransitionCounts counts_used;
    std::vector<std::string> warnings;
};

MleComponents mle_components(const TransitionCounts &counts);

struct MleResult {
    ThetaParams theta_hat;
    TransitionCounts counts_used;
    std::vector<std::string> warnings;
};

/// Ratio estimators:
///   theta1 = n_FC / (n_FF + n_FC + n_FJ),  theta2 = n_FJ / (same)
///   theta3 = n_CJ / (n_CC + n_CJ + n_CB),  theta4 = n_CB / (same)
///   theta5 = n_JC / (n_JC + n_JJ)
/// Throws DegenerateCounts when any denominator is zero.
MleResult mle(const TransitionCounts &counts);

} // namespace markov_panel

#endif
