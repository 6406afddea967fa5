#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hyperlq/oracle.hpp"
#include "hyperlq/pipeline.hpp"

using namespace hyperlq;

namespace {

// x_{k+1} = x_k + u_k, two steps, control weights 1, no state weight
DiscreteLQ scalar_chain(double x0, double target) {
    DiscreteLQ d;
    d.M = Eigen::MatrixXd::Ones(1, 1);
    d.N = Eigen::MatrixXd::Ones(1, 1);
    d.inject.assign(2, Eigen::VectorXd::Zero(1));
    d.x0 = Eigen::VectorXd::Constant(1, x0);
    d.state_weight.assign(3, Eigen::VectorXd::Zero(1));
    d.control_weight.assign(2, Eigen::VectorXd::Ones(1));
    d.target = Eigen::VectorXd::Constant(1, target);
    return d;
}

ResolvedProblem coarse(const char* name) { return resolve(builtin_example(name), UniformGrid(11, 121, 1.0, 6.0)); }

DiscreteLQ discretized(const char* name) {
    auto pr = coarse(name);
    return discretize(pr, synthesize(pr).eta);
}

// terminal state is affine in u: x_K = A u + x_K(0)
Eigen::MatrixXd terminal_map(const DiscreteLQ& d) {
    Eigen::Index nu = static_cast<Eigen::Index>(d.unknowns());
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(nu);
    Eigen::VectorXd base = simulate_discrete(d, zero).back();
    Eigen::MatrixXd A(base.size(), nu);
    for (Eigen::Index j = 0; j < nu; ++j) {
        Eigen::VectorXd e = zero;
        e(j) = 1.0;
        A.col(j) = simulate_discrete(d, e).back() - base;
    }
    return A;
}

// least-norm correction onto x_K = target
Eigen::VectorXd make_feasible(const DiscreteLQ& d, const Eigen::MatrixXd& A, Eigen::VectorXd u) {
    Eigen::VectorXd miss = simulate_discrete(d, u).back() - d.target;
    Eigen::MatrixXd AAt = A * A.transpose();
    u -= A.transpose() * AAt.ldlt().solve(miss);
    return u;
}

}  // namespace

TEST(OracleExamples, ScalarChainSplitsEvenly) {
    auto res = solve_kkt(scalar_chain(1.0, 0.0));
    ASSERT_EQ(res.u.size(), 2);
    EXPECT_NEAR(res.u(0), -0.5, 1e-12);
    EXPECT_NEAR(res.u(1), -0.5, 1e-12);
    EXPECT_NEAR(res.cost, 0.25, 1e-12);
    EXPECT_LE(res.terminal_violation, 1e-12);
}

TEST(OracleExamples, ScalarChainAlreadyOnTarget) {
    auto res = solve_kkt(scalar_chain(1.0, 1.0));
    EXPECT_NEAR(res.u.cwiseAbs().maxCoeff(), 0.0, 1e-14);
    EXPECT_NEAR(res.cost, 0.0, 1e-14);
}

TEST(OracleExamples, Ex1CoarseUnknowns) {
    auto d = discretized("ex1");
    EXPECT_EQ(d.states(), 10u);
    EXPECT_EQ(d.steps(), 120u);
    EXPECT_EQ(d.unknowns(), 1200u);
}

TEST(OracleExamples, ZeroDemoTargetsZero) {
    auto d = discretized("zero_demo");
    EXPECT_EQ(d.target.cwiseAbs().maxCoeff(), 0.0);
}

TEST(OracleExamples, SmallestLattice) {
    // three nodes: z = 0 and z = h are free, z = l is pinned
    auto pr = resolve(builtin_example("ex1"), UniformGrid(3, 13, 1.0, 6.0));
    auto d = discretize(pr, synthesize(pr).eta);
    EXPECT_EQ(d.states(), 2u);
    auto res = solve_kkt(d);
    EXPECT_LE(res.terminal_violation, 1e-8 * std::max(1.0, d.target.cwiseAbs().maxCoeff()));
    EXPECT_LE(res.kkt_residual, 1e-8);
}

TEST(OracleDiscretization, MatchesUpwindStencil) {
    auto pr = coarse("ex1");
    auto d = discretize(pr, synthesize(pr).eta);
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    Field uf(pr.grid, 0.0);
    Eigen::VectorXd u(static_cast<Eigen::Index>(d.unknowns()));
    for (std::size_t k = 0; k < d.steps(); ++k)
        for (std::size_t i = 0; i < d.controls(); ++i) {
            double v = U(rng);
            uf.at(i, k) = v;
            u(static_cast<Eigen::Index>(k * d.controls() + i)) = v;
        }
    auto xs = simulate_discrete(d, u);
    auto x = open_loop(pr, uf, TransportMethod::upwind);
    double worst = 0.0, scale = x.max_abs();
    for (std::size_t k = 0; k <= d.steps(); ++k)
        for (std::size_t i = 0; i < d.states(); ++i)
            worst = std::max(worst, std::abs(xs[k](static_cast<Eigen::Index>(i)) - x.at(i, k)));
    EXPECT_LE(worst, 1e-12 * scale);
}

TEST(OracleDiscretization, CostMatchesQuadrature) {
    auto pr = coarse("ex1");
    auto d = discretize(pr, synthesize(pr).eta);
    auto res = solve_kkt(d);
    auto uf = oracle_control_field(d, res);
    auto xf = oracle_state_field(d, res);
    // the quadrature sees the last time level of u; the discrete problem does not
    for (std::size_t i = 0; i < pr.grid.nz(); ++i) uf.at(i, pr.grid.nt() - 1) = 0.0;
    double quad = cost_quadrature(xf, uf, pr.spec.q, pr.spec.r, pr.p_samples);
    EXPECT_NEAR(res.cost, quad, 1e-10 * std::max(1.0, quad));
}

TEST(OracleDiscretization, BudgetIsEnforced) {
    auto pr = resolve(builtin_example("ex1"), UniformGrid(201, 601, 1.0, 6.0));
    EXPECT_THROW(discretize(pr, std::vector<double>(201, 0.0)), ValidationError);
    auto small = coarse("ex1");
    EXPECT_THROW(discretize(small, std::vector<double>(5, 0.0)), ValidationError);
}

TEST(OracleDiscretization, ShapeErrors) {
    auto d = scalar_chain(1.0, 0.0);
    d.control_weight.pop_back();
    EXPECT_THROW(solve_kkt(d), ValidationError);
}

TEST(OracleErrors, UnreachableTarget) {
    auto d = scalar_chain(1.0, 5.0);
    d.N = Eigen::MatrixXd::Zero(1, 1);
    EXPECT_THROW(solve_kkt(d), NumericalError);
}

TEST(OracleInvariants, CertificatesOnExamples) {
    for (const char* name : {"ex1", "ex2", "zero_demo"}) {
        auto d = discretized(name);
        auto res = solve_kkt(d);
        EXPECT_LE(res.kkt_residual, 1e-8) << name;
        EXPECT_LE(res.certificate, 1e-8) << name;
        EXPECT_LE(res.terminal_violation, 1e-8 * std::max(1.0, d.target.cwiseAbs().maxCoeff())) << name;
    }
}

TEST(OracleInvariants, DominatesFeasibleControls) {
    auto pr = coarse("ex1");
    auto d = discretize(pr, synthesize(pr).eta);
    auto res = solve_kkt(d);
    auto A = terminal_map(d);
    double tol = 1e-9 * std::max(1.0, std::abs(res.cost));

    // analytic control from a fine solve, sampled on the lattice and made feasible
    auto fine = run_pipeline(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, 0.005, 0.005),
                             profile_methods("accurate"), false);
    auto ua = restrict_to(fine.result.u, pr.grid);
    Eigen::VectorXd u(static_cast<Eigen::Index>(d.unknowns()));
    for (std::size_t k = 0; k < d.steps(); ++k)
        for (std::size_t i = 0; i < d.controls(); ++i) u(static_cast<Eigen::Index>(k * d.controls() + i)) = ua.at(i, k);
    Eigen::VectorXd feasible = make_feasible(d, A, u);
    ASSERT_LE((simulate_discrete(d, feasible).back() - d.target).cwiseAbs().maxCoeff(), 1e-8 * d.target.cwiseAbs().maxCoeff());
    EXPECT_GE(discrete_cost(d, feasible), res.cost - tol);

    std::mt19937 rng(9);
    std::normal_distribution<double> N01;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd w(u.size());
        for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = N01(rng);
        Eigen::VectorXd v = make_feasible(d, A, res.u + w);
        EXPECT_GE(discrete_cost(d, v), res.cost - tol);
    }
}

TEST(OracleInvariants, SolutionCostIsConsistent) {
    auto d = discretized("ex2");
    auto res = solve_kkt(d);
    EXPECT_NEAR(discrete_cost(d, res.u), res.cost, 1e-10 * std::max(1.0, res.cost));
}

TEST(OracleComparison, SelfComparisonHasNoGap) {
    auto pr = coarse("ex1");
    auto law = synthesize(pr);
    auto d = discretize(pr, law.eta);
    auto res = solve_kkt(d);
    auto cmp = compare(d, res, oracle_control_field(d, res), res.cost, law.gamma);
    EXPECT_EQ(cmp.cost_gap, 0.0);
    EXPECT_EQ(cmp.control_rms_gap, 0.0);
}

TEST(OracleComparison, MultipliersTrackGamma) {
    auto spec = builtin_example("ex1");
    auto fine = run_pipeline(spec, UniformGrid::from_steps(1.0, 6.0, 0.005, 0.005), profile_methods("accurate"), false);
    auto o = run_oracle(spec, fine, 11, 121, profile_methods("accurate"));
    EXPECT_GE(std::abs(o.comparison.multiplier_correlation), 0.95);
}
