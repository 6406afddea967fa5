#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hyperlq/error.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/problem.hpp"
#include "hyperlq/synthesis.hpp"

namespace hyperlq {

inline constexpr double cost_epsilon = 1e-12;

struct CostReport {
    double J_quadrature = 0.0;
    double J_closed_form = 0.0;
    double relative_gap = 0.0;
};

inline double relative_gap(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), cost_epsilon);
}

/// 1/2 int int (q x^2 + r u^2) + 1/2 int p x(.,T)^2, trapezoid throughout.
inline double cost_quadrature(const Field& x, const Field& u, double q, double r, const std::vector<double>& p) {
    require_same_grid(x, u, "cost_quadrature");
    const UniformGrid& g = x.grid();
    if (p.size() != g.nz()) throw ValidationError("p samples do not match the grid");
    Field running(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
        double xv = x.values()[n], uv = u.values()[n];
        running.values()[n] = q * xv * xv + r * uv * uv;
    }
    std::vector<double> terminal(g.nz());
    for (std::size_t i = 0; i < g.nz(); ++i) {
        double xT = x.at(i, g.nt() - 1);
        terminal[i] = p[i] * xT * xT;
    }
    return 0.5 * trapezoid_zt(running) + 0.5 * trapezoid_z(terminal, g.h());
}

inline double cost_quadrature(const Field& x, const Field& u, const ResolvedProblem& pr) {
    return cost_quadrature(x, u, pr.spec.q, pr.spec.r, pr.p_samples);
}

/// Optimal value from boundary data, initial data and the multiplier profile.
inline double optimal_cost_closed(const FeedbackLaw& law, const ResolvedProblem& pr) {
    const UniformGrid& g = pr.grid;
    const std::size_t nz = g.nz(), nt = g.nt();
    const Field& gg = law.riccati.g;
    std::vector<double> bnd(nt), init(nz), tgt(nz);
    for (std::size_t k = 0; k < nt; ++k) {
        double f = pr.phi_samples[k];
        bnd[k] = pr.spec.c * f * (gg.at(nz - 1, k) * f + law.psi.at(nz - 1, k));
    }
    for (std::size_t i = 0; i < nz; ++i) {
        double v = pr.varphi_samples[i];
        init[i] = v * (gg.at(i, 0) * v + law.psi.at(i, 0));
        tgt[i] = law.eta[i] * law.gamma[i];
    }
    return 0.5 * (trapezoid_z(bnd, g.tau()) + trapezoid_z(init, g.h()) - trapezoid_z(tgt, g.h()));
}

/// Zero-target specialization: only the initial-data term remains.
inline double optimal_cost_zero_case(const FeedbackLaw& law, const ResolvedProblem& pr) {
    if (pr.spec.target_mode != TargetMode::zero_case)
        throw ValidationError("optimal_cost_zero_case needs target_mode zero_case");
    const UniformGrid& g = pr.grid;
    std::vector<double> init(g.nz());
    for (std::size_t i = 0; i < g.nz(); ++i) {
        double v = pr.varphi_samples[i];
        init[i] = v * (law.riccati.g.at(i, 0) * v + law.psi.at(i, 0));
    }
    return 0.5 * trapezoid_z(init, g.h());
}

inline CostReport cost_report(double J_quadrature, double J_closed) {
    return {J_quadrature, J_closed, relative_gap(J_quadrature, J_closed)};
}

}  // namespace hyperlq
