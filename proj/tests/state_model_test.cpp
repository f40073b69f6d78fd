#include <doctest.h>

#include "markov_panel/errors.hpp"
#include "markov_panel/panel_io.hpp"
#include "markov_panel/random.hpp"
#include "markov_panel/state_model.hpp"
#include "test_support.hpp"

using namespace markov_panel;
using markov_panel::testing::Gen;

namespace {

ConstraintViolation::Kind violation_kind(std::initializer_list<double> values) {
    try {
        validate_theta(values);
    } catch (const ConstraintViolation &e) {
        return e.kind();
    }
    FAIL("expected ConstraintViolation");
    return ConstraintViolation::Kind::Range;
}

} // namespace

TEST_SUITE("state_model") {

TEST_CASE("validate_theta accepts the boundary and published points") {
    CHECK_NOTHROW(validate_theta({0, 0, 0, 0, 0}));
    CHECK_NOTHROW(validate_theta({0.0823, 0.0019, 0.2426, 0.0125, 0.3233}));
    CHECK_NOTHROW(validate_theta({1, 0, 0, 1, 1}));
    CHECK_NOTHROW(validate_theta({0.5, 0.5, 0.5, 0.5, 0}));
}

TEST_CASE("validate_theta reports which constraint fails") {
    CHECK(violation_kind({0.6, 0.5, 0.1, 0.1, 0.5}) == ConstraintViolation::Kind::SumFirstPair);
    CHECK(violation_kind({0.1, 0.1, 0.7, 0.4, 0.5}) == ConstraintViolation::Kind::SumSecondPair);
    CHECK(violation_kind({0.1, -0.01, 0.1, 0.1, 0.5}) == ConstraintViolation::Kind::Range);
    CHECK(violation_kind({0.1, 0.1, 0.1, 0.1, 1.5}) == ConstraintViolation::Kind::Range);
    CHECK(violation_kind({0.1, 0.1, std::nan(""), 0.1, 0.5}) == ConstraintViolation::Kind::NotFinite);
    CHECK(violation_kind({0.1, 0.1, 0.1}) == ConstraintViolation::Kind::Range);
    try {
        validate_theta({0.1, 0.1, 0.1, 0.1, 2});
    } catch (const ConstraintViolation &e) {
        CHECK(e.index() == 4);
    }
}

TEST_CASE("build_matrix") {
    SUBCASE("zero theta gives the identity") {
        CHECK(build_matrix(validate_theta({0, 0, 0, 0, 0})) == TransitionMatrix::Identity());
    }
    SUBCASE("row F of the published Bayes point") {
        const TransitionMatrix q = build_matrix(markov_panel::testing::published_bayes());
        CHECK(q(0, 0) == doctest::Approx(0.9121).epsilon(1e-12));
        CHECK(q(0, 1) == doctest::Approx(0.0842).epsilon(1e-12));
        CHECK(q(0, 2) == doctest::Approx(0.0037).epsilon(1e-12));
        CHECK(q(0, 3) == 0.0);
    }
    SUBCASE("row C by substitution") {
        const TransitionMatrix q = build_matrix(validate_theta({0.25, 0.25, 0.25, 0.25, 0.5}));
        CHECK(q.row(1) == Eigen::RowVector4d(0, 0.5, 0.25, 0.25));
    }
    SUBCASE("other scalar types") {
        const auto t = validate_theta_as<long double>(Eigen::Matrix<double, 5, 1>::Constant(0.2));
        const Matrix4<long double> q = build_matrix(t);
        CHECK(static_cast<double>(q.row(1).sum()) == doctest::Approx(1.0));
        const auto f = validate_theta_as<float>(Eigen::Matrix<double, 5, 1>::Constant(0.2));
        CHECK(build_matrix(f)(0, 0) == doctest::Approx(0.6f));
    }
}

TEST_CASE("matrix_power") {
    const TransitionMatrix q = build_matrix(markov_panel::testing::published_mle());
    CHECK(matrix_power(q, 0) == TransitionMatrix::Identity());
    CHECK(matrix_power(TransitionMatrix(TransitionMatrix::Identity()), 17) == TransitionMatrix::Identity());
    // The only two-step route from F to B is F -> C -> B.
    CHECK(matrix_power(q, 2)(0, 3) == doctest::Approx(0.0823 * 0.0125).epsilon(1e-12));
}

TEST_CASE("theta_from_matrix inverts build_matrix and rejects foreign structure") {
    const ThetaParams t = markov_panel::testing::published_bayes();
    CHECK((theta_from_matrix(build_matrix(t)).vector() - t.vector()).cwiseAbs().maxCoeff() < 1e-15);
    TransitionMatrix bad = build_matrix(t);
    bad(0, 0) -= 0.01;
    bad(0, 3) += 0.01;
    CHECK_FALSE(is_model_matrix(bad));
    CHECK_THROWS_AS(theta_from_matrix(bad), ConstraintViolation);
    bad = build_matrix(t);
    bad(1, 1) -= 0.1;
    bad(1, 0) += 0.1;
    CHECK_THROWS_AS(theta_from_matrix(bad), ConstraintViolation);
}

TEST_CASE("states and symbols") {
    for (State s : kAllStates)
        CHECK(state_from_symbol(symbol(s)) == s);
    CHECK_FALSE(state_from_symbol('X').has_value());
    CHECK(is_forbidden(State::J, State::B));
    CHECK(is_forbidden(State::F, State::B));
    CHECK_FALSE(is_forbidden(State::C, State::B));
}

TEST_CASE("rng streams are deterministic and distinct") {
    Rng a(42), b(42);
    CHECK(a.engine()() == b.engine()());
    Rng s0 = Rng(42).split(0), s0b = Rng(42).split(0), s1 = Rng(42).split(1);
    const auto x0 = s0.engine()();
    CHECK(x0 == s0b.engine()());
    CHECK(x0 != s1.engine()());
    static_assert(mix_seed(1) != mix_seed(2));
}

TEST_CASE("simulate_panel fixed cases") {
    SUBCASE("zero theta stays in F") {
        for (std::uint64_t seed : {1u, 2u, 99u}) {
            const ParcelPanel p = simulate_panel(validate_theta({0, 0, 0, 0, 0}), 22, 43, seed);
            CHECK(p == ParcelPanel(22, 43, State::F));
        }
    }
    SUBCASE("deterministic path F, C, then J forever") {
        const ParcelPanel p = simulate_panel(validate_theta({1, 0, 1, 0, 0}), 6, 3, 5);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(p(0, c) == State::F);
            CHECK(p(1, c) == State::C);
            for (std::size_t y = 2; y < 6; ++y)
                CHECK(p(y, c) == State::J);
        }
    }
    SUBCASE("same seed, same panel") {
        const ThetaParams t = markov_panel::testing::published_mle();
        CHECK(simulate_panel(t, 22, 43, 7) == simulate_panel(t, 22, 43, 7));
        CHECK_FALSE(simulate_panel(t, 22, 43, 7) == simulate_panel(t, 22, 43, 8));
    }
}

TEST_CASE("simulate_panel transition frequencies converge to the matrix") {
    const ThetaParams t = markov_panel::testing::published_mle();
    const TransitionMatrix q = build_matrix(t);
    const TransitionCounts n = count_transitions(simulate_panel(t, 22, 43000, 2024));
    for (int i = 0; i < kNumStates; ++i) {
        const double row = static_cast<double>(n.row(i).sum());
        REQUIRE(row > 0);
        for (int j = 0; j < kNumStates; ++j)
            CHECK(std::abs(static_cast<double>(n(i, j)) / row - q(i, j)) < 0.01);
    }
}

TEST_CASE("property: structural invariants over random theta") {
    Gen gen(11);
    for (int trial = 0; trial < 10000; ++trial) {
        const ThetaVector<double> v = gen.theta_vector();
        REQUIRE(in_parameter_set(v));
        const ThetaParams t = validate_theta(v);
        const TransitionMatrix q = build_matrix(t);
        REQUIRE(is_model_matrix(q));
        REQUIRE((q.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        REQUIRE((q.array() >= 0).all());
        for (const auto &[from, to] : kForbiddenTransitions)
            REQUIRE(q(index(from), index(to)) == 0.0);
        REQUIRE((theta_from_matrix(q).vector() - v).cwiseAbs().maxCoeff() < 1e-15);

        const int a = gen.integer(0, 12), b = gen.integer(0, 12);
        const TransitionMatrix lhs = matrix_power(q, a + b);
        const TransitionMatrix rhs = matrix_power(q, a) * matrix_power(q, b);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
        // F is never re-entered.
        if (a + b >= 1) {
            REQUIRE(lhs.col(0).tail<3>().isZero());
            REQUIRE(lhs(0, 0) == doctest::Approx(std::pow(1 - v(0) - v(1), a + b)).epsilon(1e-10));
        }
    }
}

TEST_CASE("property: in_parameter_set agrees with validate_theta") {
    Gen gen(12);
    for (int trial = 0; trial < 10000; ++trial) {
        ThetaVector<double> v;
        for (int i = 0; i < kNumParams; ++i)
            v(i) = -0.1 + 1.2 * gen.unit();
        bool threw = false;
        try {
            validate_theta(v);
        } catch (const ConstraintViolation &) {
            threw = true;
        }
        REQUIRE(threw == !in_parameter_set(v));
    }
}

TEST_CASE("property: simulated panels never use a forbidden transition") {
    Gen gen(13);
    for (int trial = 0; trial < 10000; ++trial) {
        const ThetaParams t = gen.theta();
        const std::size_t years = static_cast<std::size_t>(gen.integer(2, 12));
        const std::size_t parcels = static_cast<std::size_t>(gen.integer(1, 6));
        const ParcelPanel p = simulate_panel(t, years, parcels, gen.engine()());
        const TransitionCounts n = count_transitions(p);
        for (const auto &[from, to] : kForbiddenTransitions)
            REQUIRE(n(index(from), index(to)) == 0);
        for (std::size_t c = 0; c < parcels; ++c)
            REQUIRE(p(0, c) == State::F);
        const TransitionMatrix q = build_matrix(t);
        for (int i = 0; i < kNumStates; ++i)
            for (int j = 0; j < kNumStates; ++j)
                if (q(i, j) == 0.0)
                    REQUIRE(n(i, j) == 0);
    }
}

}
