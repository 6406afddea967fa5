#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hyperlq/pipeline.hpp"

using namespace hyperlq;
using expr::Expr;

namespace {

// a=0, q=0, p=0, phi=0, varphi=sin(pi z): g = 0, psi = 0, so u = 0
ProblemSpec pure_transport() {
    auto s = builtin_example("zero_demo");
    s.a = 0.0;
    s.q = 0.0;
    s.p = Expr::parse("0");
    return s;
}

double transport_exact(double z, double t, double c) {
    double s = z + c * t;
    return s <= 1.0 ? std::sin(M_PI * s) : 0.0;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.values().size(); ++n) m = std::max(m, std::abs(a.values()[n] - b.values()[n]));
    return m;
}

const Methods accurate = profile_methods("accurate");
const Methods upwind = profile_methods("upwind");

PipelineRun ex1(double h, const Methods& m, bool residuals = false) {
    return run_pipeline(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, h, h), m, residuals);
}

}  // namespace

TEST(ClosedLoop, PureTransport) {
    // c*tau/h = 1 for both marches: upwind is an exact shift
    auto pr = resolve(pure_transport(), UniformGrid::from_steps(1.0, 6.0, 0.01, 0.02));
    auto law = synthesize(pr);
    for (auto m : {TransportMethod::upwind, TransportMethod::characteristics}) {
        auto res = closed_loop(pr, law, m);
        double worst = 0.0;
        for (std::size_t k = 0; k < pr.grid.nt(); ++k)
            for (std::size_t i = 0; i < pr.grid.nz(); ++i)
                worst = std::max(worst, std::abs(res.x.at(i, k) - transport_exact(pr.grid.z(i), pr.grid.t(k), 0.5)));
        EXPECT_LT(worst, 1e-12) << to_string(m);
        EXPECT_EQ(res.u.max_abs(), 0.0);
    }
}

TEST(ClosedLoop, DataRowsAndIdentities) {
    auto run = ex1(0.002, upwind);
    const auto& g = run.problem.grid;
    const auto& x = run.result.x;
    for (std::size_t i = 0; i < g.nz(); ++i) EXPECT_EQ(x.at(i, 0), run.problem.varphi_samples[i]);
    for (std::size_t k = 0; k < g.nt(); ++k) EXPECT_EQ(x.at(g.nz() - 1, k), run.problem.phi_samples[k]);
    for (std::size_t k = 0; k < g.nt(); k += 37)
        for (std::size_t i = 0; i < g.nz(); i += 11) {
            double lam = run.law.riccati.g.at(i, k) * x.at(i, k) + run.law.psi.at(i, k);
            EXPECT_EQ(run.result.lambda.at(i, k), lam);
            EXPECT_EQ(run.result.u.at(i, k), -(1.3 / 3.0) * lam);
        }
}

TEST(ClosedLoop, Ex1ReachesTarget) {
    for (const auto& m : {upwind, accurate}) {
        auto run = ex1(0.001, m);
        EXPECT_LE(run.result.terminal_error_inf, 0.05 * max_abs(run.law.eta));
    }
}

TEST(ClosedLoop, ZeroDemoReachesZero) {
    auto run = run_pipeline(builtin_example("zero_demo"), UniformGrid::from_steps(1.0, 6.0, 0.001, 0.001), upwind, false);
    double worst = 0.0;
    for (double v : run.result.x.level(run.result.x.nt() - 1)) worst = std::max(worst, std::abs(v));
    EXPECT_LE(worst, 0.02);
}

TEST(ClosedLoop, TerminalErrorShrinksWithGrid) {
    for (const auto& m : {upwind, accurate}) {
        std::vector<double> errs;
        double scale = 0.0;
        for (double h : {0.004, 0.002, 0.001}) {
            auto run = ex1(h, m);
            errs.push_back(run.result.terminal_error_inf);
            scale = max_abs(run.law.eta);
        }
        EXPECT_LE(errs[1], errs[0]);
        EXPECT_LE(errs[2], errs[1]);
        EXPECT_LE(errs[2], 0.05 * scale);
    }
}

TEST(ClosedLoop, CflAndGridChecks) {
    auto pr = resolve(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01));
    auto law = synthesize(pr);
    auto other = resolve(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, 0.02, 0.02));
    EXPECT_THROW(closed_loop(other, law), ValidationError);
}

TEST(OpenLoop, ConstantIsInvariant) {
    auto s = pure_transport();
    s.target_mode = TargetMode::constrained;
    s.varphi = Expr::parse("4");
    s.phi = Expr::parse("4");
    s.eta = Expr::parse("4");
    auto pr = resolve(s, UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01));
    for (auto m : {TransportMethod::upwind, TransportMethod::characteristics}) {
        auto x = open_loop(pr, Field(pr.grid, 0.0), m);
        for (double v : x.values()) ASSERT_NEAR(v, 4.0, 1e-13);
    }
}

TEST(OpenLoop, Ex1GrowthFollowsCharacteristicOde) {
    // With u = 0 every node at t = T lies on a characteristic that entered at
    // z = l at time T - (l-z)/c carrying phi = 10, so dx/dt = a x gives
    // x(z,T) = 10 exp(a (l-z)/c).
    auto pr = resolve(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, 0.001, 0.001));
    for (auto m : {TransportMethod::upwind, TransportMethod::characteristics}) {
        auto x = open_loop(pr, Field(pr.grid, 0.0), m);
        double worst = 0.0;
        for (std::size_t i = 0; i < pr.grid.nz(); ++i) {
            double exact = 10.0 * std::exp(1.8 * (1.0 - pr.grid.z(i)) / 0.5);
            worst = std::max(worst, std::abs(x.at(i, pr.grid.nt() - 1) / exact - 1.0));
        }
        EXPECT_LT(worst, 1e-2) << to_string(m);
        EXPECT_NEAR(x.max_abs() / 10.0, std::exp(3.6), 0.01 * std::exp(3.6));
    }
}

TEST(OpenLoop, ReproducesClosedLoop) {
    auto pr = resolve(builtin_example("ex2"), UniformGrid::from_steps(1.0, 6.0, 0.002, 0.002));
    auto law = synthesize(pr);
    // Node-by-node identity of the two upwind updates. The characteristic
    // march samples u between nodes, so it only agrees to discretization error.
    auto res = closed_loop(pr, law);
    EXPECT_LE(max_diff(open_loop(pr, res.u), res.x), 1e-10);
}

TEST(Costate, ZeroData) {
    auto pr = resolve(pure_transport(), UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01));
    Field x(pr.grid, 3.0);
    auto lam = costate_solve(pr, x, std::vector<double>(pr.grid.nz(), 0.0));
    EXPECT_EQ(lam.max_abs(), 0.0);
}

TEST(Costate, UnitCaseMatchesOffset) {
    ProblemSpec s = pure_transport();
    s.c = 1.0;
    s.T = 3.0;
    s.b = 1.0;
    s.r = 1.0;
    s.target_mode = TargetMode::constrained;
    s.eta = Expr::parse("z*(1-z)");
    for (double h : {0.01, 0.005}) {
        auto pr = resolve(s, UniformGrid::from_steps(1.0, 3.0, h, h));
        auto law = synthesize(pr);
        auto res = closed_loop(pr, law);
        auto lam = costate_solve(pr, res.x, law.gamma);
        EXPECT_LE(max_diff(lam, law.psi), h);
    }
}

TEST(Costate, Ex1RelationHolds) {
    auto run = ex1(0.001, accurate);
    auto lam = costate_solve(run.problem, run.result.x, run.law.gamma, accurate.transport);
    EXPECT_LE(max_diff(lam, run.result.lambda), 0.01 * lam.max_abs());
}

TEST(Costate, RelationIsFirstOrder) {
    std::vector<double> per_h;
    for (double h : {0.004, 0.002, 0.001}) {
        auto run = ex1(h, accurate);
        auto lam = costate_solve(run.problem, run.result.x, run.law.gamma, accurate.transport);
        per_h.push_back(max_diff(lam, run.result.lambda) / h);
    }
    double C = per_h.front();
    for (double v : per_h) EXPECT_LE(v, 1.25 * C);
}

TEST(TerminalFormula, IdentityFactorFirstTerm) {
    auto s = pure_transport();
    s.target_mode = TargetMode::constrained;
    s.phi = Expr::parse("sin(t)");
    s.eta = Expr::parse("sin(6-(1-z)/0.5)");
    auto pr = resolve(s, UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01));
    auto ric = solve_riccati(pr, RiccatiMethod::upwind_euler, Quadrature::left);
    std::vector<double> zero(pr.grid.nz(), 0.0);
    auto law = build_feedback(ric, 0.0, zero, zero, Field(pr.grid), PsiMethod::characteristics, 1.3, 3.0,
                              TargetMode::constrained);
    auto xT = closed_form_terminal(law, pr);
    for (std::size_t i = 0; i < xT.size(); ++i) EXPECT_NEAR(xT[i], std::sin(6.0 - (1.0 - pr.grid.z(i)) / 0.5), 1e-14);
}

TEST(TerminalFormula, Ex2PiecewiseTarget) {
    auto pr = resolve(builtin_example("ex2"), UniformGrid::from_steps(1.0, 6.0, 0.001, 0.001));
    auto law = synthesize(pr);
    auto xT = closed_form_terminal(law, pr);
    for (std::size_t i = 0; i < xT.size(); ++i) ASSERT_NEAR(xT[i], law.eta[i], 1e-3 * max_abs(law.eta));
    EXPECT_NEAR(xT[500], 10.0, 1e-6);
}

TEST(Residuals, ShiftSchemeIsExact) {
    auto pr = resolve(pure_transport(), UniformGrid::from_steps(1.0, 6.0, 0.01, 0.02));
    auto law = synthesize(pr);
    auto res = closed_loop(pr, law);
    EXPECT_LE(residuals(res, law, pr).state_pde, 1e-8);
}

TEST(Residuals, Ex1Stationarity) {
    auto run = ex1(0.001, upwind, true);
    EXPECT_LE(run.result.residuals.stationarity, 1e-12);
    EXPECT_LE(residuals(run.result, run.law, run.problem, false).stationarity, 1e-12);
}

TEST(Residuals, Ex1StateResidualContracts) {
    auto coarse = ex1(0.002, accurate, true);
    auto fine = ex1(0.001, accurate, true);
    EXPECT_GE(coarse.result.residuals.state_pde / fine.result.residuals.state_pde, 1.5);
}

TEST(Residuals, TransformResidualIsAtLeastFirstOrder) {
    std::vector<double> r;
    for (double h : {0.004, 0.002, 0.001}) r.push_back(ex1(h, accurate, true).result.residuals.transform);
    EXPECT_GE(r[0] / r[1], 1.8);
    EXPECT_GE(r[1] / r[2], 1.8);
}

TEST(Residuals, AllFiniteAndNonnegative) {
    auto run = ex1(0.004, upwind, true);
    const auto& r = run.result.residuals;
    for (double v : {r.state_pde, r.costate_pde, r.terminal_costate, r.stationarity, r.transform}) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
    }
}

TEST(Stabilization, ZeroDemoStaysSmall) {
    auto run = run_pipeline(builtin_example("zero_demo"), UniformGrid::from_steps(1.0, 6.0, 0.002, 0.002), upwind, false);
    const auto& g = run.problem.grid;
    double terminal = 0.0;
    for (double v : run.result.x.level(g.nt() - 1)) terminal = std::max(terminal, std::abs(v));
    auto ext = extended_stabilization(run.problem, run.result.x, 1.2 * g.T());
    EXPECT_NEAR(ext.grid().T(), 1.2 * g.T(), 1e-9);
    double after = 0.0;
    for (std::size_t k = g.nt(); k < ext.nt(); ++k)
        for (double v : ext.level(k)) after = std::max(after, std::abs(v));
    EXPECT_LE(after, 2.0 * terminal * std::exp(1.8 * 0.2 * g.T()));
}

TEST(Stabilization, ZeroDataStaysZero) {
    auto s = builtin_example("zero_demo");
    s.varphi = Expr::parse("0");
    auto run = run_pipeline(s, UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01), upwind, false);
    auto ext = extended_stabilization(run.problem, run.result.x, 2.0 * s.T);
    EXPECT_EQ(ext.max_abs(), 0.0);
}

TEST(Stabilization, Preconditions) {
    auto run = ex1(0.01, upwind);
    EXPECT_THROW(extended_stabilization(run.problem, run.result.x, 7.0), ValidationError);
    auto z = run_pipeline(builtin_example("zero_demo"), UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01), upwind, false);
    EXPECT_THROW(extended_stabilization(z.problem, z.result.x, 6.0), ValidationError);
    EXPECT_THROW(extended_stabilization(z.problem, z.result.x, 19.0), ValidationError);
}
