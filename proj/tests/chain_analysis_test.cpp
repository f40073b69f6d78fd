#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "markov_panel/chain_analysis.hpp"
#include "markov_panel/errors.hpp"
#include "test_support.hpp"

using namespace markov_panel;
namespace mt = markov_panel::testing;

namespace {

// Direct propagation: mass arriving at the target at step n is f(n); that mass is
// then removed so it is never counted again.
std::vector<double> forward_propagation(const Eigen::MatrixXd &q, Eigen::Index source, Eigen::Index target,
                                        int horizon) {
    Eigen::RowVectorXd law = Eigen::RowVectorXd::Unit(q.rows(), source);
    std::vector<double> f;
    for (int n = 1; n <= horizon; ++n) {
        law = (law * q).eval();
        f.push_back(law(target));
        law(target) = 0.0;
    }
    return f;
}

// Mean time from F to B by Cramer's rule on the C/J equations, then the F equation.
double mean_f_to_b(const TransitionMatrix &q) {
    // m_C = 1 + q_CC m_C + q_CJ m_J,  m_J = 1 + q_JC m_C + q_JJ m_J
    const double a11 = 1 - q(1, 1), a12 = -q(1, 2), a21 = -q(2, 1), a22 = 1 - q(2, 2);
    const double det = a11 * a22 - a12 * a21;
    const double m_c = (a22 - a12) / det;
    const double m_j = (a11 - a21) / det;
    return (1 + q(0, 1) * m_c + q(0, 2) * m_j) / (1 - q(0, 0));
}

// Perron root and left eigenvector of the C/J block from a general eigensolver.
std::pair<double, Eigen::Vector2d> cj_perron(const TransitionMatrix &q) {
    const Eigen::Matrix2d block = q.block<2, 2>(1, 1).transpose();
    Eigen::EigenSolver<Eigen::Matrix2d> es(block);
    Eigen::Index best = 0;
    es.eigenvalues().real().maxCoeff(&best);
    Eigen::Vector2d v = es.eigenvectors().col(best).real().cwiseAbs();
    return {es.eigenvalues()(best).real(), v / v.sum()};
}

} // namespace

TEST_SUITE("chain_analysis") {

TEST_CASE("geometric first passage of a two-state absorbing chain") {
    for (double a : {0.05, 0.3, 0.9}) {
        Eigen::Matrix2d q;
        q << 1 - a, a, 0, 1;
        const FirstPassagePmf pmf = first_passage_pmf(q, 0, 1, 60);
        for (int n = 1; n <= 60; ++n)
            CHECK(pmf(n) == doctest::Approx(std::pow(1 - a, n - 1) * a).epsilon(1e-12));
        CHECK(hitting_time_mean(q, 0, 1) == doctest::Approx(1 / a));
    }
}

TEST_CASE("deterministic path F -> C -> B") {
    const TransitionMatrix q = build_matrix(validate_theta({1, 0, 0, 1, 0}));
    const FirstPassagePmf pmf = first_passage_pmf(q, State::F, State::B, 10);
    for (int n = 1; n <= 10; ++n)
        CHECK(pmf(n) == (n == 2 ? 1.0 : 0.0));
    CHECK(pmf.median() == 2);
    CHECK(hitting_time_mean(q, State::F, State::B) == doctest::Approx(2));
}

TEST_CASE("first passage on the published matrices") {
    for (const ThetaParams &t : {mt::published_mle(), mt::published_bayes()}) {
        const TransitionMatrix q = build_matrix(t);
        const FirstPassagePmf pmf = first_passage_pmf(q, State::F, State::B, 5000);
        const auto oracle = forward_propagation(q, 0, 3, 500);
        for (int n = 1; n <= 500; ++n)
            REQUIRE(std::abs(pmf(n) - oracle[static_cast<std::size_t>(n - 1)]) < 1e-12);
        const double mean = hitting_time_mean(q, State::F, State::B);
        CHECK(mean == doctest::Approx(mean_f_to_b(q)).epsilon(1e-10));
        CHECK(std::abs(pmf.truncated_mean() - mean) < 0.1);
        CHECK(survival_mass(q, 0, 3, 5000) < 1e-9);
        CHECK(pmf.total_mass() + survival_mass(q, 0, 3, 5000) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const TransitionMatrix q_mle = build_matrix(mt::published_mle());
    const TransitionMatrix q_bayes = build_matrix(mt::published_bayes());
    CHECK(hitting_time_mean(q_mle, State::F, State::B) == doctest::Approx(151.97).epsilon(1e-4));
    CHECK(hitting_time_mean(q_bayes, State::F, State::B) == doctest::Approx(127.73).epsilon(1e-4));
    CHECK(hitting_time_median(q_mle, 0, 3) == 109);
    CHECK(hitting_time_median(q_bayes, 0, 3) == 92);
}

TEST_CASE("reachability") {
    const TransitionMatrix no_b = build_matrix(validate_theta({0.1, 0.05, 0.3, 0, 0.4}));
    CHECK_FALSE(hits_almost_surely(no_b, 0, 3));
    CHECK_THROWS_AS(hitting_time_mean(no_b, State::F, State::B), Unreachable);
    CHECK_THROWS_AS(hitting_time_median(no_b, 0, 3), Unreachable);
    CHECK(first_passage_pmf(no_b, State::F, State::B, 50).total_mass() == 0.0);

    const TransitionMatrix q = build_matrix(mt::published_mle());
    CHECK(hits_almost_surely(q, 0, 3));
    CHECK(hits_almost_surely(q, 0, 1));
    CHECK_FALSE(hits_almost_surely(q, 1, 2)); // C can be absorbed before reaching J
    CHECK_FALSE(hits_almost_surely(q, 1, 0));
    CHECK_FALSE(hits_almost_surely(q, 3, 1));
    // Return time to an absorbing state is one step.
    CHECK(hitting_time_mean(q, State::B, State::B) == doctest::Approx(1));
    CHECK_THROWS_AS(hitting_time_median(q, 0, 3, 50), Unreachable);
    CHECK_THROWS_AS(first_passage_pmf(q, State::F, State::B, 0), Error);
}

TEST_CASE("return time on an irreducible chain") {
    Eigen::Matrix3d q;
    q << 0.5, 0.5, 0, 0.25, 0.5, 0.25, 0, 0.5, 0.5;
    // Stationary law (1/4, 1/2, 1/4), so the mean return time to state 0 is 4.
    CHECK(hitting_time_mean(q, 0, 0) == doctest::Approx(4));
    const FirstPassagePmf pmf = first_passage_pmf(q, 0, 0, 3000);
    CHECK(pmf.truncated_mean() == doctest::Approx(4).epsilon(1e-9));
    const auto oracle = forward_propagation(q, 0, 0, 200);
    for (int n = 1; n <= 200; ++n)
        REQUIRE(std::abs(pmf(n) - oracle[static_cast<std::size_t>(n - 1)]) < 1e-12);
}

TEST_CASE("property: recurrence agrees with forward propagation for random theta") {
    mt::Gen gen(51);
    for (int trial = 0; trial < 200; ++trial) {
        const ThetaParams t = gen.interior_theta(0.01);
        const TransitionMatrix q = build_matrix(t);
        const FirstPassagePmf pmf = first_passage_pmf(q, State::F, State::B, 500);
        const auto oracle = forward_propagation(q, 0, 3, 500);
        for (int n = 1; n <= 500; ++n)
            REQUIRE(std::abs(pmf(n) - oracle[static_cast<std::size_t>(n - 1)]) < 1e-10);
        REQUIRE(pmf.total_mass() + survival_mass(q, 0, 3, 500) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("property: linear-solve mean equals the pmf mean plus tail") {
    mt::Gen gen(52);
    for (int trial = 0; trial < 100; ++trial) {
        const ThetaParams t = gen.interior_theta(0.05);
        const TransitionMatrix q = build_matrix(t);
        const double mean = hitting_time_mean(q, State::F, State::B);
        REQUIRE(mean == doctest::Approx(mean_f_to_b(q)).epsilon(1e-9));
        const FirstPassagePmf pmf = first_passage_pmf(q, State::F, State::B, 5000);
        REQUIRE(std::abs(pmf.truncated_mean() - mean) < 0.1);
    }
}

TEST_CASE("quasi-stationary distribution on the published matrices") {
    const QuasiStationary a = quasi_stationary(build_matrix(mt::published_mle()));
    CHECK(a.mu(0) == 0.0);
    CHECK(a.mu(1) == doctest::Approx(0.5659).epsilon(1e-4));
    CHECK(a.mu(2) == doctest::Approx(0.4341).epsilon(1e-4));
    CHECK(a.lambda == doctest::Approx(0.99294).epsilon(1e-5));
    const QuasiStationary b = quasi_stationary(build_matrix(mt::published_bayes()));
    CHECK(b.mu(1) == doctest::Approx(0.5672).epsilon(1e-4));
    CHECK(b.mu(2) == doctest::Approx(0.4328).epsilon(1e-4));
    CHECK(b.lambda == doctest::Approx(0.99149).epsilon(1e-5));

    for (const ThetaParams &t : {mt::published_mle(), mt::published_bayes()}) {
        const TransitionMatrix q = build_matrix(t);
        const QuasiStationary qs = quasi_stationary(q);
        const auto [lambda, v] = cj_perron(q);
        CHECK(qs.lambda == doctest::Approx(lambda).epsilon(1e-12));
        CHECK((qs.mu.tail<2>() - v).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((quasi_stationary_by_iteration(q, 5000) - qs.mu).cwiseAbs().maxCoeff() < 1e-8);
        // Left eigenvector of the transient block.
        const Eigen::RowVector3d lhs = qs.mu.transpose() * q.topLeftCorner<3, 3>();
        CHECK((lhs.transpose() - qs.lambda * qs.mu).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("quasi-stationary special cases") {
    SUBCASE("symmetric C/J exchange") {
        const QuasiStationary qs = quasi_stationary(build_matrix(validate_theta({0.1, 0.1, 0.3, 0, 0.3})));
        CHECK(qs.mu(1) == doctest::Approx(0.5));
        CHECK(qs.mu(2) == doctest::Approx(0.5));
        CHECK(qs.lambda == doctest::Approx(1.0));
    }
    SUBCASE("one step from F") {
        const TransitionMatrix q = build_matrix(mt::published_mle());
        const Eigen::Vector3d one = quasi_stationary_by_iteration(q, 1);
        const Eigen::Vector3d row = q.block<1, 3>(0, 0).transpose();
        CHECK((one - row / row.sum()).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("identity dynamics") {
        const TransitionMatrix q = build_matrix(validate_theta({0, 0, 0, 0, 0}));
        for (int n : {1, 10, 1000})
            CHECK(quasi_stationary_by_iteration(q, n) == Eigen::Vector3d(1, 0, 0));
        CHECK_THROWS_AS(quasi_stationary(q), DegenerateBlock);
    }
    SUBCASE("slow F keeps mass on F") {
        const TransitionMatrix q = build_matrix(validate_theta({0.01, 0.0, 0.1, 0.4, 0.2}));
        const QuasiStationary qs = quasi_stationary(q);
        CHECK(qs.mu(0) > 0);
        CHECK(qs.lambda == doctest::Approx(0.99));
        CHECK((quasi_stationary_by_iteration(q, 5000) - qs.mu).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("certain absorption") {
        const TransitionMatrix q = build_matrix(validate_theta({1, 0, 0, 1, 0.5}));
        CHECK_THROWS_AS(quasi_stationary_by_iteration(q, 5), DegenerateBlock);
    }
}

TEST_CASE("property: iteration converges to the eigenvector") {
    mt::Gen gen(53);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const ThetaParams t = gen.interior_theta(0.02);
        const TransitionMatrix q = build_matrix(t);
        const QuasiStationary qs = quasi_stationary(q);
        // Skip draws whose spectral gap is too small for 5000 steps to settle.
        Eigen::EigenSolver<Eigen::Matrix3d> es(q.topLeftCorner<3, 3>());
        std::vector<double> moduli;
        for (int i = 0; i < 3; ++i)
            moduli.push_back(std::abs(es.eigenvalues()(i)));
        std::sort(moduli.begin(), moduli.end());
        if (std::pow(moduli[1] / moduli[2], 5000) > 1e-12)
            continue;
        ++checked;
        REQUIRE((quasi_stationary_by_iteration(q, 5000) - qs.mu).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK(checked > 250);
}

}
