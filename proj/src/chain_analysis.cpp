#include "markov_panel/chain_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "markov_panel/errors.hpp"

namespace markov_panel {

double FirstPassagePmf::total_mass() const {
    double sum = 0.0;
    for (double x : f)
        sum += x;
    return sum;
}

double FirstPassagePmf::truncated_mean() const {
    double sum = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n)
        sum += static_cast<double>(n + 1) * f[n];
    return sum;
}

int FirstPassagePmf::median() const {
    double cumulative = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) {
        cumulative += f[n];
        if (cumulative >= 0.5)
            return static_cast<int>(n + 1);
    }
    return 0;
}

FirstPassagePmf first_passage_pmf(const MatrixRef &q, Eigen::Index source, Eigen::Index target,
                                  int horizon) {
    if (horizon < 1)
        throw Error("first-passage horizon must be at least 1");
    const Eigen::Index d = q.rows();

    // from_source[n] = Q^n(s,t), from_target[n] = Q^n(t,t), n = 1..horizon.
    std::vector<double> from_source(static_cast<std::size_t>(horizon) + 1);
    std::vector<double> from_target(static_cast<std::size_t>(horizon) + 1);
    Eigen::RowVectorXd row_s = Eigen::RowVectorXd::Unit(d, source);
    Eigen::RowVectorXd row_t = Eigen::RowVectorXd::Unit(d, target);
    for (int n = 1; n <= horizon; ++n) {
        row_s = (row_s * q).eval();
        row_t = (row_t * q).eval();
        from_source[static_cast<std::size_t>(n)] = row_s(target);
        from_target[static_cast<std::size_t>(n)] = row_t(target);
    }

    FirstPassagePmf pmf;
    pmf.source = source;
    pmf.target = target;
    pmf.horizon = horizon;
    pmf.f.resize(static_cast<std::size_t>(horizon));
    for (int n = 1; n <= horizon; ++n) {
        double value = from_source[static_cast<std::size_t>(n)];
        for (int k = 1; k < n; ++k)
            value -= pmf.f[static_cast<std::size_t>(k - 1)] * from_target[static_cast<std::size_t>(n - k)];
        pmf.f[static_cast<std::size_t>(n - 1)] = std::max(0.0, value);
    }
    return pmf;
}

double survival_mass(const MatrixRef &q, Eigen::Index source, Eigen::Index target, int horizon) {
    Eigen::MatrixXd killed = q;
    killed.col(target).setZero();
    Eigen::RowVectorXd law = Eigen::RowVectorXd::Unit(q.rows(), source);
    for (int n = 0; n < horizon; ++n)
        law = (law * killed).eval();
    law(target) = 0.0;
    return law.sum();
}

namespace {

// States visited at some step n >= 1 before (or when) first entering `target`,
// for the chain started at `from`.
std::vector<bool> visited_before_hit(const MatrixRef &q, Eigen::Index from, Eigen::Index target) {
    const Eigen::Index d = q.rows();
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    std::vector<Eigen::Index> stack;
    const auto expand = [&](Eigen::Index e) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (q(e, j) > 0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                if (j != target)
                    stack.push_back(j);
            }
        }
    };
    expand(from);
    while (!stack.empty()) {
        const Eigen::Index e = stack.back();
        stack.pop_back();
        expand(e);
    }
    return seen;
}

} // namespace

bool hits_almost_surely(const MatrixRef &q, Eigen::Index source, Eigen::Index target) {
    const auto visited = visited_before_hit(q, source, target);
    if (!visited[static_cast<std::size_t>(target)])
        return false;
    // Finite chain: the target is hit a.s. iff no state the chain can wander
    // into has lost its path to the target.
    for (Eigen::Index e = 0; e < q.rows(); ++e) {
        if (e == target || !visited[static_cast<std::size_t>(e)])
            continue;
        if (!visited_before_hit(q, e, target)[static_cast<std::size_t>(target)])
            return false;
    }
    return true;
}

double hitting_time_mean(const MatrixRef &q, Eigen::Index source, Eigen::Index target) {
    if (!hits_almost_surely(q, source, target))
        throw Unreachable("state " + std::to_string(target) + " is not reached with probability 1 from state " +
                          std::to_string(source));
    const auto visited = visited_before_hit(q, source, target);
    std::vector<Eigen::Index> transient;
    for (Eigen::Index e = 0; e < q.rows(); ++e)
        if (e != target && (visited[static_cast<std::size_t>(e)] || e == source))
            transient.push_back(e);

    const auto m = static_cast<Eigen::Index>(transient.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            system(i, j) -= q(transient[static_cast<std::size_t>(i)], transient[static_cast<std::size_t>(j)]);
    const Eigen::VectorXd times = system.fullPivLu().solve(Eigen::VectorXd::Ones(m));

    if (source == target) {
        double mean = 1.0;
        for (Eigen::Index j = 0; j < m; ++j)
            mean += q(source, transient[static_cast<std::size_t>(j)]) * times(j);
        return mean;
    }
    const auto it = std::find(transient.begin(), transient.end(), source);
    return times(it - transient.begin());
}

int hitting_time_median(const MatrixRef &q, Eigen::Index source, Eigen::Index target, int horizon) {
    if (!hits_almost_surely(q, source, target))
        throw Unreachable("state " + std::to_string(target) + " is not reached with probability 1 from state " +
                          std::to_string(source));
    const int median = first_passage_pmf(q, source, target, horizon).median();
    if (median == 0)
        throw Unreachable("median hitting time exceeds the horizon of " + std::to_string(horizon));
    return median;
}

QuasiStationary quasi_stationary(const TransitionMatrix &q) {
    if (!is_model_matrix(q))
        throw DegenerateBlock("matrix does not have the model structure (B absorbing, F not re-entered)");
    const Eigen::Matrix3d block = q.topLeftCorner<3, 3>();
    const double stay_f = block(0, 0);
    const double a = block(1, 1), b = block(1, 2), c = block(2, 1), d = block(2, 2);

    const double half_gap = 0.5 * (a - d);
    const double lambda_cj = 0.5 * (a + d) + std::sqrt(half_gap * half_gap + b * c);
    const double lambda = std::max(stay_f, lambda_cj);

    Eigen::FullPivLU<Eigen::Matrix3d> lu(block.transpose() - lambda * Eigen::Matrix3d::Identity());
    lu.setThreshold(1e-12);
    if (!(lambda > 0) || lu.rank() < 2)
        throw DegenerateBlock("quasi-stationary eigenvector is not unique (reducible F/C/J block)");

    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    if (lambda_cj >= stay_f) {
        // mu(F) = 0; left eigenvector of [[a, b], [c, d]] at lambda.
        const Eigen::Vector2d v1(c, lambda - a);
        const Eigen::Vector2d v2(lambda - d, b);
        mu.tail<2>() = v1.squaredNorm() >= v2.squaredNorm() ? v1 : v2;
    } else {
        // mu(F) > 0: mu_CJ = mu_F * r (lambda I - B)^-1 with r the exits from F.
        Eigen::Matrix2d shifted = lambda * Eigen::Matrix2d::Identity() - block.bottomRightCorner<2, 2>();
        const Eigen::RowVector2d r = block.block<1, 2>(0, 1);
        mu(0) = 1.0;
        mu.tail<2>() = (r * shifted.inverse()).transpose();
    }
    mu = mu.cwiseAbs();
    mu /= mu.sum();
    return QuasiStationary{mu, lambda};
}

Eigen::Vector3d quasi_stationary_by_iteration(const TransitionMatrix &q, int n_steps) {
    if (n_steps < 1)
        throw Error("quasi-stationary iteration needs at least one step");
    Eigen::RowVector4d law = initial_law();
    for (int n = 0; n < n_steps; ++n) {
        law = (law * q).eval();
        // Conditioning on X_n != B; rescaling every step avoids underflow and
        // leaves the ratio unchanged.
        const double alive = law.head<3>().sum();
        if (!(alive > 0))
            throw DegenerateBlock("chain is absorbed with certainty by step " + std::to_string(n + 1));
        law.head<3>() /= alive;
        law(3) = 0.0;
    }
    return law.head<3>().transpose();
}

} // namespace markov_panel
