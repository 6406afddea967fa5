#pragma once

// Backward Riccati gain g(z,t), the effective rate abar = a + bbar*g, and the
// characteristic factor e(z,t) = exp(-(1/c) * integral_z^l abar(xi, t-(xi-z)/c) dxi).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hyperlq/error.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/parallel.hpp"
#include "hyperlq/problem.hpp"
#include "hyperlq/transport.hpp"

namespace hyperlq {

enum class RiccatiMethod { upwind_euler, characteristics_rk4 };
/// Rule for the e-exponent along each characteristic.
enum class Quadrature { left, trapezoid };

inline const char* to_string(RiccatiMethod m) {
    return m == RiccatiMethod::upwind_euler ? "upwind_euler" : "characteristics_rk4";
}
inline const char* to_string(Quadrature q) { return q == Quadrature::left ? "left" : "trapezoid"; }

struct RiccatiCoefficients {
    double a;
    double bbar;
    double c;
    double q;
};

struct RiccatiSolution {
    Field g;
    Field abar;
    Field e;  // masked outside t >= (l-z)/c
    RiccatiMethod method;
    Quadrature quadrature;
    double max_g;
    double stiffness;  // tau * |2a + 2|bbar| max g|; explicit source is stable below 1
};

inline constexpr double default_g_max = 1e6;

/// g_s + c g_z = q + 2a g + bbar g^2, g(z,T) = p(z), g(0,t) = 0.
inline Field solve_g(const UniformGrid& grid, const RiccatiCoefficients& k, std::vector<double> p_samples,
                     std::function<double(double)> p_at, RiccatiMethod method,
                     double g_max = default_g_max) {
    MarchSpec spec;
    spec.direction = Direction::backward;
    spec.c = k.c;
    spec.start = std::move(p_samples);
    spec.start_at = std::move(p_at);
    spec.boundary.assign(grid.nt(), 0.0);
    spec.on_level = [&](std::size_t lvl, std::span<const double> row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!(std::abs(row[i]) <= g_max)) {
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "Riccati gain blew up: |g| = %.3g exceeds G_max = %.3g at z=%g, t=%g; "
                              "the weights/horizon are too large for the small-data solvability condition",
                              std::abs(row[i]), g_max, grid.z(i), grid.t(lvl));
                throw RiccatiBlowup(buf);
            }
        }
    };
    auto source = [&](double g) { return k.q + 2.0 * k.a * g + k.bbar * g * g; };
    if (method == RiccatiMethod::upwind_euler)
        return march_upwind(grid, spec, [&](std::size_t, std::size_t, double g) { return source(g); });
    return march_characteristics(grid, spec, [&](double, double, double g) { return source(g); });
}

inline Field solve_g(const ResolvedProblem& pr, RiccatiMethod method, double g_max = default_g_max) {
    const ProblemSpec& s = pr.spec;
    return solve_g(pr.grid, {s.a, pr.bbar, s.c, s.q}, pr.p_samples,
                   [&pr](double z) { return pr.p_at(z); }, method, g_max);
}

inline Field form_abar(const Field& g, double a, double bbar) {
    Field out(g.grid());
    auto& dst = out.values();
    const auto& src = g.values();
    for (std::size_t n = 0; n < src.size(); ++n) dst[n] = a + bbar * src[n];
    return out;
}

/// True when node (i,k) lies in t >= (l - z)/c.
inline bool e_valid(const UniformGrid& g, double c, std::size_t i, std::size_t k) {
    double need = static_cast<double>(g.nz() - 1 - i) * g.h() / c;
    return g.t(k) >= need - 1e-9 * g.tau();
}

inline Field exponential_factor(const Field& abar, double c, Quadrature rule) {
    const UniformGrid& g = abar.grid();
    const std::size_t nz = g.nz(), nt = g.nt();
    const double h = g.h();
    Field e(g, 0.0);
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t i = 0; i < nz; ++i) e.set_valid(i, k, e_valid(g, c, i, k));

    double d = h / (c * g.tau());
    const bool aligned = std::abs(d - std::round(d)) < 1e-9;
    if (aligned) {
        // Exponent recursion along the characteristic, one cell at a time.
        const std::size_t di = static_cast<std::size_t>(std::round(d));
        for (std::size_t k = 0; k < nt; ++k) e.at(nz - 1, k) = 0.0;
        for (std::size_t ii = nz - 1; ii-- > 0;) {
            const std::size_t first = (nz - 1 - ii) * di;
            if (first >= nt) continue;
            parallel_for(nt - first, [&](std::size_t off) {
                std::size_t k = first + off;
                double inc = rule == Quadrature::left
                                 ? h / c * abar.at(ii, k)
                                 : 0.5 * h / c * (abar.at(ii, k) + abar.at(ii + 1, k - di));
                e.at(ii, k) = e.at(ii + 1, k - di) + inc;
            });
        }
    } else {
        parallel_for(nz * nt, [&](std::size_t n) {
            std::size_t i = n % nz, k = n / nz;
            if (!e.valid(i, k)) return;
            double sum = 0.0;
            for (std::size_t j = i; j < nz; ++j) {
                double tj = std::max(0.0, g.t(k) - (g.z(j) - g.z(i)) / c);
                double v = interp_time(abar, j, tj);
                double w = 1.0;
                if (rule == Quadrature::left) {
                    if (j + 1 == nz) w = 0.0;
                } else if (j == i || j + 1 == nz) {
                    w = 0.5;
                }
                sum += w * v;
            }
            e.at(i, k) = h / c * sum;
        });
    }
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t i = 0; i < nz; ++i) {
            if (!e.valid(i, k)) {
                e.at(i, k) = 0.0;
                continue;
            }
            double v = std::exp(-e.at(i, k));
            if (!std::isfinite(v) || !(v > 0.0))
                throw NumericalError("exponential factor out of range at z=" + std::to_string(g.z(i)) +
                                     ", t=" + std::to_string(g.t(k)));
            e.at(i, k) = v;
        }
    return e;
}

/// Value of e on the characteristic through (z_i, T) at spatial node j >= i.
inline double e_on_final_characteristic(const Field& e, double c, std::size_t i, std::size_t j) {
    const UniformGrid& g = e.grid();
    return interp_time(e, j, g.T() - (g.z(j) - g.z(i)) / c);
}

inline RiccatiSolution solve_riccati(const ResolvedProblem& pr, RiccatiMethod method, Quadrature rule,
                                     double g_max = default_g_max) {
    Field g = solve_g(pr, method, g_max);
    Field abar = form_abar(g, pr.spec.a, pr.bbar);
    Field e = exponential_factor(abar, pr.spec.c, rule);
    double max_g = g.max_abs();
    double stiff = pr.grid.tau() * std::abs(2.0 * pr.spec.a + 2.0 * std::abs(pr.bbar) * max_g);
    return RiccatiSolution{std::move(g), std::move(abar), std::move(e), method, rule, max_g, stiff};
}

}  // namespace hyperlq
