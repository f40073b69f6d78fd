#include "markov_panel/estimation_mle.hpp"

#include <cmath>
#include <limits>

namespace markov_panel {

namespace {

constexpr int F = index(State::F);
constexpr int C = index(State::C);
constexpr int J = index(State::J);

double loglik_matrix(const TransitionMatrix &q, const TransitionCounts &counts) {
    double total = 0.0;
    for (int i = 0; i < kNumStates; ++i) {
        for (int j = 0; j < kNumStates; ++j) {
            const auto n = counts(i, j);
            if (n == 0)
                continue;
            if (q(i, j) <= 0.0)
                return -std::numeric_limits<double>::infinity();
            total += static_cast<double>(n) * std::log(q(i, j));
        }
    }
    return total;
}

} // namespace

double log_likelihood(const ThetaParams &theta, const TransitionCounts &counts) {
    return loglik_matrix(build_matrix(theta), counts);
}

double log_likelihood(const ThetaVector<double> &theta, const TransitionCounts &counts) {
    if (!in_parameter_set(theta))
        return -std::numeric_limits<double>::infinity();
    return log_likelihood(validate_theta(theta), counts);
}

TransitionCounts drop_forbidden(const TransitionCounts &counts, std::vector<std::string> *warnings) {
    TransitionCounts out = counts;
    for (const auto &[from, to] : kForbiddenTransitions) {
        auto &cell = out(index(from), index(to));
        if (cell != 0 && warnings)
            warnings->push_back(std::to_string(cell) + " forbidden transition(s) " + symbol(from) +
                                "->" + symbol(to) + " ignored");
        cell = 0;
    }
    return out;
}

MleComponents mle_components(const TransitionCounts &counts) {
    MleComponents out;
    out.counts_used = drop_forbidden(counts, &out.warnings);
    const TransitionCounts &n = out.counts_used;

    const auto from_f = n(F, F) + n(F, C) + n(F, J);
    const auto from_c = n(C, C) + n(C, J) + n(C, index(State::B));
    const auto from_j = n(J, C) + n(J, J);
    if (from_f > 0) {
        out.theta[0] = static_cast<double>(n(F, C)) / static_cast<double>(from_f);
        out.theta[1] = static_cast<double>(n(F, J)) / static_cast<double>(from_f);
    }
    if (from_c > 0) {
        out.theta[2] = static_cast<double>(n(C, J)) / static_cast<double>(from_c);
        out.theta[3] = static_cast<double>(n(C, index(State::B))) / static_cast<double>(from_c);
    }
    if (from_j > 0)
        out.theta[4] = static_cast<double>(n(J, C)) / static_cast<double>(from_j);
    return out;
}

MleResult mle(const TransitionCounts &counts) {
    MleComponents parts = mle_components(counts);

    std::vector<int> missing;
    std::string why;
    auto note = [&](const char *row, std::initializer_list<int> params) {
        if (!why.empty())
            why += "; ";
        why += std::string("no transitions out of ") + row + " (";
        bool first = true;
        for (int k : params) {
            missing.push_back(k);
            why += (first ? "theta" : ", theta") + std::to_string(k + 1);
            first = false;
        }
        why += " unidentifiable)";
    };
    if (!parts.theta[0])
        note("F", {0, 1});
    if (!parts.theta[2])
        note("C", {2, 3});
    if (!parts.theta[4])
        note("J", {4});
    if (!missing.empty())
        throw DegenerateCounts(why, std::move(missing));

    ThetaVector<double> v;
    for (int k = 0; k < kNumParams; ++k)
        v(k) = *parts.theta[static_cast<std::size_t>(k)];
    return MleResult{validate_theta(v), parts.counts_used, std::move(parts.warnings)};
}

} // namespace markov_panel
