#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "hyperlq/problem.hpp"

using namespace hyperlq;
using expr::Expr;

namespace {

bool mentions(const std::vector<std::string>& report, const std::string& text) {
    for (const auto& v : report)
        if (v.find(text) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Validate, PublishedExamplesAreClean) {
    EXPECT_TRUE(validate(builtin_example("ex1")).empty());
    EXPECT_TRUE(validate(builtin_example("ex2")).empty());
    EXPECT_TRUE(validate(builtin_example("zero_demo")).empty());
}

TEST(Validate, ShortHorizon) {
    auto s = builtin_example("ex1");
    s.T = 2.0;
    auto r = validate(s);
    EXPECT_TRUE(mentions(r, "horizon \xE2\x89\xA4 2l/c = 4")) << (r.empty() ? "" : r[0]);
    s.T = 4.0;  // strict inequality
    EXPECT_TRUE(mentions(validate(s), "horizon"));
}

TEST(Validate, NegativeTerminalWeight) {
    auto s = builtin_example("ex1");
    s.p = Expr::parse("z-0.5");
    auto r = validate(s);
    EXPECT_TRUE(mentions(r, "p negative on [0,0.5)")) << (r.empty() ? "" : r[0]);
}

TEST(Validate, OtherAssumptions) {
    auto s = builtin_example("ex1");
    s.p = Expr::parse("z+1");
    EXPECT_TRUE(mentions(validate(s), "p(0)"));
    s = builtin_example("ex1");
    s.varphi = Expr::parse("9");
    EXPECT_TRUE(mentions(validate(s), "incompatible"));
    s = builtin_example("ex1");
    s.b = 0.0;
    EXPECT_TRUE(mentions(validate(s), "b must be nonzero"));
    s = builtin_example("ex1");
    s.c = -1.0;
    s.r = 0.0;
    s.q = -1.0;
    auto r = validate(s);
    EXPECT_TRUE(mentions(r, "c must be positive"));
    EXPECT_TRUE(mentions(r, "r must be positive"));
    EXPECT_TRUE(mentions(r, "q must be nonnegative"));
    s = builtin_example("zero_demo");
    s.phi = Expr::parse("sin(pi*t)");
    s.varphi = Expr::parse("0");
    EXPECT_TRUE(mentions(validate(s), "zero_case requires phi"));
    s = builtin_example("ex1");
    s.phi = Expr::parse("10+z");
    EXPECT_TRUE(mentions(validate(s), "phi"));
}

TEST(ValidateProperties, TotalOnFiniteInput) {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const char* exprs[] = {"z", "z-0.5", "1/z", "sqrt(z-2)", "0", "exp(z)", "10", "1+cos(8*pi*z)", "z^2"};
    for (int trial = 0; trial < 300; ++trial) {
        ProblemSpec s;
        s.a = u(rng);
        s.b = u(rng);
        s.c = u(rng);
        s.q = u(rng);
        s.r = u(rng);
        s.l = u(rng);
        s.T = u(rng) * 3.0;
        s.p = Expr::parse(exprs[rng() % 9]);
        s.varphi = Expr::parse(exprs[rng() % 9]);
        s.phi = Expr::parse(std::string("if(t<1, 1, ") + std::to_string(u(rng)) + ")");
        s.eta = Expr::parse("eta0*z");
        s.target_mode = rng() % 2 ? TargetMode::constrained : TargetMode::zero_case;
        EXPECT_NO_THROW(validate(s));
    }
    ProblemSpec inf = builtin_example("ex1");
    inf.a = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(validate(inf).empty());
}

TEST(Resolve, Ex1Bbar) {
    auto pr = resolve(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, 0.001, 0.001));
    EXPECT_NEAR(pr.bbar, -1.69 / 3.0, 1e-15);
    EXPECT_EQ(pr.p_samples.size(), 1001u);
    EXPECT_EQ(pr.phi_samples.size(), 6001u);
    EXPECT_EQ(pr.p_samples[1000], 1.0);
}

TEST(Resolve, CflViolation) {
    // c*tau/h = 0.5*0.004/0.001 = 2
    try {
        resolve(builtin_example("ex1"), UniformGrid::from_steps(1.0, 6.0, 0.001, 0.004));
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("CFL"), std::string::npos);
    }
}

TEST(Resolve, ZeroCaseBoundarySamples) {
    auto pr = resolve(builtin_example("zero_demo"), UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01));
    for (double v : pr.phi_samples) EXPECT_EQ(v, 0.0);
}

TEST(Resolve, InvalidSpecAndGridMismatch) {
    auto s = builtin_example("ex1");
    s.T = 3.0;
    EXPECT_THROW(resolve(s, UniformGrid::from_steps(1.0, 3.0, 0.01, 0.01)), ValidationError);
    EXPECT_THROW(resolve(builtin_example("ex1"), UniformGrid::from_steps(1.0, 5.0, 0.01, 0.01)), ValidationError);
}

TEST(Resolve, ResamplingIsIdempotent) {
    auto g = UniformGrid::from_steps(1.0, 6.0, 0.01, 0.01);
    auto pr = resolve(builtin_example("ex2"), g);
    for (std::size_t i = 0; i < g.nz(); ++i) {
        EXPECT_EQ(pr.varphi_samples[i], pr.varphi_at(g.z(i)));
        EXPECT_EQ(pr.p_samples[i], pr.p_at(g.z(i)));
    }
    for (std::size_t k = 0; k < g.nt(); ++k) EXPECT_EQ(pr.phi_samples[k], pr.phi_at(g.t(k)));
    auto again = resolve(pr.spec, g);
    EXPECT_EQ(again.varphi_samples, pr.varphi_samples);
    EXPECT_EQ(again.phi_samples, pr.phi_samples);
}

TEST(Builtins, Ex1TerminalWeight) {
    auto s = builtin_example("ex1");
    EXPECT_TRUE(s.p == Expr::parse("z"));
    EXPECT_EQ(s.a, 1.8);
    EXPECT_EQ(s.b, 1.3);
    EXPECT_EQ(s.c, 0.5);
    EXPECT_EQ(s.q, 2.0);
    EXPECT_EQ(s.r, 3.0);
    EXPECT_EQ(s.T, 6.0);
}

TEST(Builtins, Ex2TargetMiddle) {
    auto s = builtin_example("ex2");
    EXPECT_EQ(s.eta.evaluate({{"z", 0.5}, {"eta0", 0.45}}), 10.0);
}

TEST(Builtins, ZeroDemoCompatible) {
    auto s = builtin_example("zero_demo");
    EXPECT_EQ(s.phi("t", 0.0), 0.0);
    EXPECT_NEAR(s.varphi("z", 1.0), 0.0, 1e-15);
    EXPECT_EQ(s.target_mode, TargetMode::zero_case);
}

TEST(Builtins, Unknown) { EXPECT_THROW(builtin_example("ex3"), ValidationError); }

TEST(ProblemJson, RoundTrip) {
    for (const char* name : {"ex1", "ex2", "zero_demo"}) {
        auto s = builtin_example(name);
        auto back = problem_from_json(problem_to_json(s));
        EXPECT_EQ(back.a, s.a);
        EXPECT_EQ(back.T, s.T);
        EXPECT_TRUE(back.eta == s.eta);
        EXPECT_TRUE(back.varphi == s.varphi);
        EXPECT_EQ(back.target_mode, s.target_mode);
    }
}

TEST(ProblemJson, Errors) {
    auto j = problem_to_json(builtin_example("ex1"));
    auto extra = j;
    extra["d"] = 1;
    EXPECT_THROW(problem_from_json(extra), ValidationError);
    auto missing = j;
    missing.erase("q");
    EXPECT_THROW(problem_from_json(missing), ValidationError);
    auto numeric = j;
    numeric["varphi"] = 10;
    EXPECT_EQ(problem_from_json(numeric).varphi("z", 0.3), 10.0);
    auto bad = j;
    bad["p"] = "z+";
    EXPECT_THROW(problem_from_json(bad), SyntaxError);
}
