#ifndef MARKOV_PANEL_STATE_MODEL_HPP
#define MARKOV_PANEL_STATE_MODEL_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "markov_panel/errors.hpp"

namespace markov_panel {

// Land-use states. The numeric value is the row/column index everywhere.
enum class State : std::uint8_t { F = 0, C = 1, J = 2, B = 3 };

inline constexpr int kNumStates = 4;
inline constexpr int kNumParams = 5;
inline constexpr std::array<State, kNumStates> kAllStates = {State::F, State::C, State::J,
                                                            State::B};

constexpr int index(State s) { return static_cast<int>(s); }

constexpr char symbol(State s) { return "FCJB"[index(s)]; }

constexpr std::optional<State> state_from_symbol(char c) {
    switch (c) {
    case 'F':
        return State::F;
    case 'C':
        return State::C;
    case 'J':
        return State::J;
    case 'B':
        return State::B;
    default:
        return std::nullopt;
    }
}

// Transitions the model rules out (row, column).
inline constexpr std::array<std::pair<State, State>, 7> kForbiddenTransitions = {{
    {State::F, State::B},
    {State::C, State::F},
    {State::J, State::F},
    {State::B, State::F},
    {State::B, State::C},
    {State::B, State::J},
    {State::J, State::B},
}};

constexpr bool is_forbidden(State from, State to) {
    for (const auto &[a, b] : kForbiddenTransitions)
        if (a == from && b == to)
            return true;
    return false;
}

template <typename Scalar> using ThetaVector = Eigen::Matrix<Scalar, kNumParams, 1>;
template <typename Scalar> using Matrix4 = Eigen::Matrix<Scalar, kNumStates, kNumStates>;

using TransitionMatrix = Matrix4<double>;

/// Membership test for the parameter set: every component in [0,1],
/// theta1 + theta2 <= 1 and theta3 + theta4 <= 1.
template <typename Derived> bool in_parameter_set(const Eigen::MatrixBase<Derived> &v) {
    for (Eigen::Index i = 0; i < kNumParams; ++i) {
        const auto x = v(i);
        if (!(x >= 0 && x <= 1))
            return false;
    }
    return v(0) + v(1) <= 1 && v(2) + v(3) <= 1;
}

/// A point of the parameter set. Only constructible through validate_theta.
template <typename Scalar> class BasicThetaParams {
  public:
    using vector_type = ThetaVector<Scalar>;

    const vector_type &vector() const { return theta_; }
    Scalar operator()(Eigen::Index i) const { return theta_(i); }

    bool operator==(const BasicThetaParams &other) const { return theta_ == other.theta_; }

    template <typename S, typename Derived>
    friend BasicThetaParams<S> validate_theta_as(const Eigen::MatrixBase<Derived> &v);

  private:
    explicit BasicThetaParams(const vector_type &theta) : theta_(theta) {}
    vector_type theta_;
};

using ThetaParams = BasicThetaParams<double>;

template <typename Scalar, typename Derived>
BasicThetaParams<Scalar> validate_theta_as(const Eigen::MatrixBase<Derived> &v) {
    if (v.size() != kNumParams)
        throw ConstraintViolation(ConstraintViolation::Kind::Range, 0,
                                  "theta must have exactly 5 components");
    for (Eigen::Index i = 0; i < kNumParams; ++i) {
        using std::isfinite;
        if (!isfinite(v(i)))
            throw ConstraintViolation(ConstraintViolation::Kind::NotFinite,
                                      static_cast<std::size_t>(i),
                                      "theta" + std::to_string(i + 1) + " is not finite");
        if (v(i) < 0 || v(i) > 1)
            throw ConstraintViolation(ConstraintViolation::Kind::Range,
                                      static_cast<std::size_t>(i),
                                      "theta" + std::to_string(i + 1) + " outside [0,1]");
    }
    if (v(0) + v(1) > 1)
        throw ConstraintViolation(ConstraintViolation::Kind::SumFirstPair, 0,
                                  "theta1 + theta2 exceeds 1");
    if (v(2) + v(3) > 1)
        throw ConstraintViolation(ConstraintViolation::Kind::SumSecondPair, 2,
                                  "theta3 + theta4 exceeds 1");
    return BasicThetaParams<Scalar>(v.template cast<Scalar>());
}

template <typename Derived> ThetaParams validate_theta(const Eigen::MatrixBase<Derived> &v) {
    return validate_theta_as<double>(v);
}

inline ThetaParams validate_theta(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v(i++) = x;
    return validate_theta(v);
}

/// Transition matrix induced by theta, rows and columns ordered F, C, J, B.
template <typename Scalar> Matrix4<Scalar> build_matrix(const BasicThetaParams<Scalar> &theta) {
    const auto &t = theta.vector();
    Matrix4<Scalar> q = Matrix4<Scalar>::Zero();
    q(0, 0) = Scalar(1) - t(0) - t(1);
    q(0, 1) = t(0);
    q(0, 2) = t(1);
    q(1, 1) = Scalar(1) - t(2) - t(3);
    q(1, 2) = t(2);
    q(1, 3) = t(3);
    q(2, 1) = t(4);
    q(2, 2) = Scalar(1) - t(4);
    q(3, 3) = Scalar(1);
    return q;
}

/// Row vector of the initial law (point mass on F).
template <typename Scalar = double> Eigen::Matrix<Scalar, 1, kNumStates> initial_law() {
    Eigen::Matrix<Scalar, 1, kNumStates> mu = Eigen::Matrix<Scalar, 1, kNumStates>::Zero();
    mu(index(State::F)) = Scalar(1);
    return mu;
}

/// n-step transition matrix by repeated multiplication; Q^0 is the identity.
template <typename Derived>
typename Derived::PlainObject matrix_power(const Eigen::MatrixBase<Derived> &q, int n) {
    using Plain = typename Derived::PlainObject;
    Plain result = Plain::Identity(q.rows(), q.cols());
    for (int k = 0; k < n; ++k)
        result = (result * q).eval();
    return result;
}

/// True when q has the model's structure: row-stochastic within tol, entries in
/// [0,1], forbidden cells zero and B absorbing.
bool is_model_matrix(const TransitionMatrix &q, double tol = 1e-9);

/// Recovers theta from a matrix with the model's structure.
/// Throws ConstraintViolation if q is not such a matrix.
ThetaParams theta_from_matrix(const TransitionMatrix &q, double tol = 1e-9);

/// Year x parcel grid of states. Row n holds every parcel's state in year n.
class ParcelPanel {
  public:
    ParcelPanel() = default;
    ParcelPanel(std::size_t n_years, std::size_t n_parcels, State fill = State::F)
        : n_years_(n_years), n_parcels_(n_parcels), states_(n_years * n_parcels, fill) {}

    std::size_t n_years() const { return n_years_; }
    std::size_t n_parcels() const { return n_parcels_; }

    State operator()(std::size_t year, std::size_t parcel) const {
        return states_[year * n_parcels_ + parcel];
    }
    State &operator()(std::size_t year, std::size_t parcel) {
        return states_[year * n_parcels_ + parcel];
    }

    /// Trajectory of one parcel over all years.
    std::vector<State> column(std::size_t parcel) const;

    bool operator==(const ParcelPanel &) const = default;

  private:
    std::size_t n_years_ = 0;
    std::size_t n_parcels_ = 0;
    std::vector<State> states_;
};

/// Independent chains started at F, one per parcel. Parcel p draws from
/// stream p of the seed, so the result is a pure function of the arguments.
ParcelPanel simulate_panel(const ThetaParams &theta, std::size_t n_years, std::size_t n_parcels,
                           std::uint64_t seed);

} // namespace markov_panel

#endif
