#pragma once

#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperlq/error.hpp"
#include "hyperlq/expr.hpp"
#include "hyperlq/grid.hpp"

namespace hyperlq {

enum class TargetMode { constrained, zero_case };

inline const char* to_string(TargetMode m) { return m == TargetMode::zero_case ? "zero_case" : "constrained"; }

/// The continuous problem. Function-valued data are expressions:
/// p, varphi, eta in z (eta may use eta0), phi in t.
struct ProblemSpec {
    double a = 0.0;
    double b = 1.0;
    double c = 1.0;
    double q = 0.0;
    double r = 1.0;
    double l = 1.0;
    double T = 1.0;
    expr::Expr p;
    expr::Expr varphi;
    expr::Expr phi;
    expr::Expr eta;
    TargetMode target_mode = TargetMode::constrained;

    double bbar() const { return -b * b / r; }
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline void check_symbols(const expr::Expr& e, const char* name, const std::set<std::string>& allowed,
                          std::vector<std::string>& out) {
    for (const auto& s : e.symbols())
        if (!allowed.count(s)) out.push_back(std::string(name) + " may not reference '" + s + "'");
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j)
        v[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
    return v;
}

}  // namespace detail

/// Every violated standing assumption, as text. Never throws for finite input.
inline std::vector<std::string> validate(const ProblemSpec& s) {
    using detail::fmt;
    std::vector<std::string> out;
    const double coeffs[] = {s.a, s.b, s.c, s.q, s.r, s.l, s.T};
    const char* names[] = {"a", "b", "c", "q", "r", "l", "T"};
    bool finite = true;
    for (int j = 0; j < 7; ++j)
        if (!std::isfinite(coeffs[j])) {
            out.push_back(std::string(names[j]) + " is not finite");
            finite = false;
        }
    if (!finite) return out;

    if (!(s.c > 0.0)) out.push_back("c must be positive (got " + fmt(s.c) + ")");
    if (!(s.r > 0.0)) out.push_back("r must be positive (got " + fmt(s.r) + ")");
    if (s.q < 0.0) out.push_back("q must be nonnegative (got " + fmt(s.q) + ")");
    if (s.b == 0.0) out.push_back("b must be nonzero");
    if (!(s.l > 0.0)) out.push_back("l must be positive (got " + fmt(s.l) + ")");
    if (!(s.T > 0.0)) out.push_back("T must be positive (got " + fmt(s.T) + ")");
    if (s.c > 0.0 && s.l > 0.0 && !(s.T > 2.0 * s.l / s.c))
        out.push_back("horizon \xE2\x89\xA4 2l/c = " + fmt(2.0 * s.l / s.c));

    std::size_t before = out.size();
    detail::check_symbols(s.p, "p", {"z"}, out);
    detail::check_symbols(s.varphi, "varphi", {"z"}, out);
    detail::check_symbols(s.phi, "phi", {"t"}, out);
    detail::check_symbols(s.eta, "eta", {"z", "eta0"}, out);
    if (out.size() != before || !(s.l > 0.0) || !(s.T > 0.0)) return out;

    constexpr std::size_t n = 1001;
    constexpr double tol = 1e-9;
    try {
        auto zs = detail::linspace(0.0, s.l, n);
        auto p = expr::sample(s.p, "z", zs);
        for (std::size_t j = 0; j < n; ++j) {
            if (p[j] < -tol) {
                std::size_t e = j;
                while (e < n && p[e] < -tol) ++e;
                std::string upper = e < n ? fmt(zs[e]) + ")" : fmt(s.l) + "]";
                out.push_back("p negative on [" + fmt(zs[j]) + "," + upper);
                break;
            }
        }
        if (std::abs(p[0]) > tol) out.push_back("p(0) = " + fmt(p[0]) + " must be 0");
    } catch (const Error& e) {
        out.push_back(std::string("p: ") + e.what());
    }
    try {
        double v_l = s.varphi("z", s.l);
        double f_0 = s.phi("t", 0.0);
        if (std::abs(v_l - f_0) > tol)
            out.push_back("incompatible data: varphi(l) = " + fmt(v_l) + " differs from phi(0) = " + fmt(f_0));
        expr::sample(s.varphi, "z", detail::linspace(0.0, s.l, n));
    } catch (const Error& e) {
        out.push_back(std::string("varphi/phi: ") + e.what());
    }
    try {
        auto f = expr::sample(s.phi, "t", detail::linspace(0.0, s.T, n));
        if (s.target_mode == TargetMode::zero_case) {
            for (double v : f)
                if (std::abs(v) > tol) {
                    out.push_back("zero_case requires phi identically 0");
                    break;
                }
        }
    } catch (const Error& e) {
        out.push_back(std::string("phi: ") + e.what());
    }
    return out;
}

/// Problem data sampled on a grid. eta is resolved later, once eta0 is known.
struct ResolvedProblem {
    ProblemSpec spec;
    UniformGrid grid;
    double bbar;
    std::vector<double> p_samples;
    std::vector<double> varphi_samples;
    std::vector<double> phi_samples;

    double phi_at(double t) const { return spec.phi("t", t); }
    double varphi_at(double z) const { return spec.varphi("z", z); }
    double p_at(double z) const { return spec.p("z", z); }
};

inline void check_cfl(const UniformGrid& g, double c) {
    double nu = g.cfl(c);
    if (nu > 1.0 + 1e-12)
        throw ValidationError("CFL number c*tau/h = " + detail::fmt(nu) + " exceeds 1 (h=" +
                              detail::fmt(g.h()) + ", tau=" + detail::fmt(g.tau()) + ")");
}

inline ResolvedProblem resolve(const ProblemSpec& spec, const UniformGrid& grid) {
    auto report = validate(spec);
    if (!report.empty()) {
        std::string msg = "invalid problem:";
        for (const auto& v : report) msg += "\n  - " + v;
        throw ValidationError(msg);
    }
    if (std::abs(grid.l() - spec.l) > 1e-12 * spec.l || std::abs(grid.T() - spec.T) > 1e-12 * spec.T)
        throw ValidationError("grid extents do not match the problem (l, T)");
    check_cfl(grid, spec.c);

    std::vector<double> zs(grid.nz()), ts(grid.nt());
    for (std::size_t i = 0; i < grid.nz(); ++i) zs[i] = grid.z(i);
    for (std::size_t k = 0; k < grid.nt(); ++k) ts[k] = grid.t(k);
    return ResolvedProblem{spec,
                           grid,
                           spec.bbar(),
                           expr::sample(spec.p, "z", zs),
                           expr::sample(spec.varphi, "z", zs),
                           expr::sample(spec.phi, "t", ts)};
}

/// Built-in problems: ex1, ex2 (two worked examples) and zero_demo.
inline ProblemSpec builtin_example(const std::string& name) {
    ProblemSpec s;
    s.a = 1.8;
    s.b = 1.3;
    s.c = 0.5;
    s.q = 2.0;
    s.r = 3.0;
    s.l = 1.0;
    s.T = 6.0;
    s.p = expr::Expr::parse("z");
    if (name == "ex1") {
        s.varphi = expr::Expr::parse("10");
        s.phi = expr::Expr::parse("10");
        s.eta = expr::Expr::parse("eta0+(10-eta0)*z");
    } else if (name == "ex2") {
        s.varphi = expr::Expr::parse("1+cos(8*pi*z)");
        s.phi = expr::Expr::parse("1+cos(pi*t)");
        s.eta = expr::Expr::parse(
            "if(z<=0.25, 10-16*(10-eta0)*(z-0.25)^2, if(z<=0.75, 10, 10-128*(z-0.75)^2))");
    } else if (name == "zero_demo") {
        s.varphi = expr::Expr::parse("sin(pi*z)");
        s.phi = expr::Expr::parse("0");
        s.eta = expr::Expr::parse("0");
        s.target_mode = TargetMode::zero_case;
    } else {
        throw ValidationError("unknown example '" + name + "' (known: ex1, ex2, zero_demo)");
    }
    return s;
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("problem must be a JSON object");
    static const std::set<std::string> known = {"a", "b", "c", "q", "r", "l", "T",
                                                "p", "varphi", "phi", "eta", "target_mode"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ValidationError("unknown problem key '" + key + "'");
    ProblemSpec s;
    auto number = [&](const char* key, double& dst) {
        if (!j.contains(key)) throw ValidationError(std::string("missing problem key '") + key + "'");
        if (!j[key].is_number()) throw ValidationError(std::string("problem key '") + key + "' must be a number");
        dst = j[key].get<double>();
    };
    auto expression = [&](const char* key, expr::Expr& dst, bool required) {
        if (!j.contains(key)) {
            if (required) throw ValidationError(std::string("missing problem key '") + key + "'");
            return;
        }
        const auto& v = j[key];
        if (v.is_string())
            dst = expr::Expr::parse(v.get<std::string>());
        else if (v.is_number())
            dst = expr::Expr::constant(v.get<double>());
        else
            throw ValidationError(std::string("problem key '") + key + "' must be an expression string");
    };
    number("a", s.a);
    number("b", s.b);
    number("c", s.c);
    number("q", s.q);
    number("r", s.r);
    number("l", s.l);
    number("T", s.T);
    if (j.contains("target_mode")) {
        auto m = j["target_mode"].is_string() ? j["target_mode"].get<std::string>() : std::string();
        if (m == "constrained")
            s.target_mode = TargetMode::constrained;
        else if (m == "zero_case")
            s.target_mode = TargetMode::zero_case;
        else
            throw ValidationError("target_mode must be \"constrained\" or \"zero_case\"");
    }
    expression("p", s.p, true);
    expression("varphi", s.varphi, true);
    expression("phi", s.phi, true);
    expression("eta", s.eta, s.target_mode == TargetMode::constrained);
    return s;
}

inline nlohmann::json problem_to_json(const ProblemSpec& s) {
    return {{"a", s.a},
            {"b", s.b},
            {"c", s.c},
            {"q", s.q},
            {"r", s.r},
            {"l", s.l},
            {"T", s.T},
            {"p", s.p.to_string()},
            {"varphi", s.varphi.to_string()},
            {"phi", s.phi.to_string()},
            {"eta", s.eta.to_string()},
            {"target_mode", to_string(s.target_mode)}};
}

}  // namespace hyperlq
