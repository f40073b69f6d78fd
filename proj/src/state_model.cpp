#include "markov_panel/state_model.hpp"

#include "markov_panel/random.hpp"

namespace markov_panel {

bool is_model_matrix(const TransitionMatrix &q, double tol) {
    if (!q.allFinite())
        return false;
    if ((q.array() < -tol).any() || (q.array() > 1 + tol).any())
        return false;
    for (int i = 0; i < kNumStates; ++i)
        if (std::abs(q.row(i).sum() - 1.0) > tol)
            return false;
    for (const auto &[from, to] : kForbiddenTransitions)
        if (std::abs(q(index(from), index(to))) > tol)
            return false;
    return std::abs(q(3, 3) - 1.0) <= tol;
}

ThetaParams theta_from_matrix(const TransitionMatrix &q, double tol) {
    if (!is_model_matrix(q, tol))
        throw ConstraintViolation(ConstraintViolation::Kind::Range, 0,
                                  "matrix does not have the F/C/J/B model structure");
    ThetaVector<double> v;
    v << q(0, 1), q(0, 2), q(1, 2), q(1, 3), q(2, 1);
    // Absorb rounding in the inputs so the recovered vector lies in the set.
    v = v.cwiseMax(0.0).cwiseMin(1.0);
    if (v(0) + v(1) > 1)
        v.segment<2>(0) /= v(0) + v(1);
    if (v(2) + v(3) > 1)
        v.segment<2>(2) /= v(2) + v(3);
    return validate_theta(v);
}

std::vector<State> ParcelPanel::column(std::size_t parcel) const {
    std::vector<State> out(n_years_);
    for (std::size_t n = 0; n < n_years_; ++n)
        out[n] = (*this)(n, parcel);
    return out;
}

ParcelPanel simulate_panel(const ThetaParams &theta, std::size_t n_years, std::size_t n_parcels,
                           std::uint64_t seed) {
    const TransitionMatrix q = build_matrix(theta);
    ParcelPanel panel(n_years, n_parcels, State::F);
    const Rng master(seed);
    for (std::size_t p = 0; p < n_parcels; ++p) {
        Rng rng = master.split(p);
        int current = index(State::F);
        for (std::size_t n = 1; n < n_years; ++n) {
            const double u = rng.uniform();
            double cumulative = 0.0;
            int next = current;
            for (int j = 0; j < kNumStates; ++j) {
                if (q(current, j) <= 0.0)
                    continue;
                cumulative += q(current, j);
                next = j;
                if (u < cumulative)
                    break;
            }
            current = next;
            panel(n, p) = static_cast<State>(current);
        }
    }
    return panel;
}

} // namespace markov_panel
