#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hyperlq/error.hpp"
#include "hyperlq/expr.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/problem.hpp"
#include "hyperlq/riccati.hpp"
#include "hyperlq/transport.hpp"

namespace hyperlq {

enum class PsiMethod { characteristics, upwind_euler };

inline const char* to_string(PsiMethod m) {
    return m == PsiMethod::characteristics ? "characteristics" : "upwind_euler";
}

/// Synthesized controller u = -(b/r)(g x + psi).
struct FeedbackLaw {
    RiccatiSolution riccati;
    double eta0 = 0.0;
    std::vector<double> eta;
    std::vector<double> gamma;
    Field psi;
    PsiMethod psi_method = PsiMethod::characteristics;
    double b = 1.0;
    double r = 1.0;
    TargetMode mode = TargetMode::constrained;

    const UniformGrid& grid() const { return psi.grid(); }
    double costate(std::size_t i, std::size_t k, double x) const {
        return riccati.g.at(i, k) * x + psi.at(i, k);
    }
    double control(std::size_t i, std::size_t k, double x) const { return -(b / r) * costate(i, k, x); }
};

/// eta(0) forced by the boundary data: phi(T - l/c) / e(0,T).
inline double compute_eta0(const RiccatiSolution& ric, const std::function<double(double)>& phi_at, double c) {
    const UniformGrid& g = ric.e.grid();
    const std::size_t kT = g.nt() - 1;
    if (!ric.e.valid(0, kT)) throw NumericalError("e(0,T) is outside the valid region");
    return phi_at(g.T() - g.l() / c) / ric.e.at(0, kT);
}

/// Samples eta with eta0 bound and checks the endpoint compatibility and continuity.
inline std::vector<double> resolve_eta(const ResolvedProblem& pr, double eta0) {
    const UniformGrid& g = pr.grid;
    if (pr.spec.target_mode == TargetMode::zero_case) return std::vector<double>(g.nz(), 0.0);
    expr::Bindings bind{{"eta0", eta0}};
    std::vector<double> zs(g.nz());
    for (std::size_t i = 0; i < g.nz(); ++i) zs[i] = g.z(i);
    auto eta = expr::sample(pr.spec.eta, "z", zs, bind);

    char buf[200];
    double eta_l = pr.spec.eta("z", pr.spec.l, bind);
    double phi_T = pr.phi_at(pr.spec.T);
    if (std::abs(eta_l - phi_T) > 1e-9) {
        std::snprintf(buf, sizeof buf, "eta(l) = %.10g differs from phi(T) = %.10g", eta_l, phi_T);
        throw ValidationError(buf);
    }
    double eta_0 = pr.spec.eta("z", 0.0, bind);
    if (std::abs(eta_0 - eta0) > 1e-9 * std::max(1.0, std::abs(eta0))) {
        std::snprintf(buf, sizeof buf, "eta(0) = %.10g differs from the compatible value eta0 = %.10g",
                      eta_0, eta0);
        throw ValidationError(buf);
    }
    double scale = 1.0;
    for (double v : eta) scale = std::max(scale, std::abs(v));
    auto jump = expr::max_jump(pr.spec.eta, "z", 0.0, pr.spec.l, bind);
    if (jump.max_jump > 1e-6 * scale) {
        std::snprintf(buf, sizeof buf, "eta is discontinuous: jump %.3g at z = %.6g", jump.max_jump,
                      jump.location);
        throw ValidationError(buf);
    }
    return eta;
}

/// Multiplier profile. gamma[i] = N_i / D_i at interior nodes, quadratic
/// extrapolation at z = l where both vanish.
inline std::vector<double> compute_gamma(const std::vector<double>& eta,
                                         const std::function<double(double)>& phi_at,
                                         const RiccatiSolution& ric, double bbar, double c) {
    const UniformGrid& g = ric.e.grid();
    const std::size_t nz = g.nz(), kT = g.nt() - 1;
    const double h = g.h(), T = g.T(), l = g.l();
    std::vector<double> gamma(nz, 0.0);
    std::vector<double> sq(nz);
    for (std::size_t i = 0; i + 1 < nz; ++i) {
        double eT = ric.e.at(i, kT);
        double num = (eT * eta[i] - phi_at(T - (l - g.z(i)) / c)) * eT * c;
        for (std::size_t j = i; j < nz; ++j) {
            double ej = e_on_final_characteristic(ric.e, c, i, j);
            sq[j] = bbar * ej * ej;
        }
        double den = trapezoid_z(std::span<const double>(sq).subspan(i), h);
        if (!(std::abs(den) >= 1e-14 * std::abs(bbar) * h))
            throw NumericalError("degenerate multiplier denominator at z=" + std::to_string(g.z(i)));
        gamma[i] = num / den;
    }
    if (nz >= 4)
        gamma[nz - 1] = 3.0 * gamma[nz - 2] - 3.0 * gamma[nz - 3] + gamma[nz - 4];
    else
        gamma[nz - 1] = 2.0 * gamma[nz - 2] - gamma[nz - 3];
    return gamma;
}

/// psi_s + c psi_z = abar psi, psi(z,T) = gamma, psi(0,t) = 0.
inline Field solve_psi(const std::vector<double>& gamma, const RiccatiSolution& ric, double c, PsiMethod method) {
    const UniformGrid& g = ric.e.grid();
    const std::size_t nz = g.nz(), nt = g.nt();
    if (method == PsiMethod::upwind_euler) {
        MarchSpec spec;
        spec.direction = Direction::backward;
        spec.c = c;
        spec.start = gamma;
        spec.boundary.assign(nt, 0.0);
        return march_upwind(g, spec, [&](std::size_t i, std::size_t k, double v) { return ric.abar.at(i, k) * v; });
    }
    // psi = e * v with v = gamma / e(.,T) carried unchanged along characteristics.
    std::vector<double> v(nz);
    for (std::size_t j = 0; j < nz; ++j) v[j] = gamma[j] / ric.e.at(j, nt - 1);
    Field psi(g, 0.0);
    const double h = g.h(), T = g.T(), tol = 1e-12 * g.l();
    parallel_for(nt, [&](std::size_t k) {
        for (std::size_t i = 0; i < nz; ++i) {
            double z0 = g.z(i) - c * (T - g.t(k));
            if (z0 < -tol) continue;
            if (!ric.e.valid(i, k))
                throw NumericalError("psi queried e outside its valid region at z=" + std::to_string(g.z(i)));
            psi.at(i, k) = ric.e.at(i, k) * interp_space(v, h, std::max(z0, 0.0));
        }
    });
    for (std::size_t k = 0; k < nt; ++k) psi.at(0, k) = 0.0;
    for (std::size_t i = 0; i < nz; ++i) psi.at(i, nt - 1) = gamma[i];
    return psi;
}

inline FeedbackLaw build_feedback(RiccatiSolution ric, double eta0, std::vector<double> eta,
                                  std::vector<double> gamma, Field psi, PsiMethod method, double b, double r,
                                  TargetMode mode) {
    const UniformGrid& g = ric.g.grid();
    if (!(psi.grid() == g) || eta.size() != g.nz() || gamma.size() != g.nz())
        throw ValidationError("feedback components are not on one grid");
    return FeedbackLaw{std::move(ric), eta0, std::move(eta), std::move(gamma), std::move(psi), method, b, r, mode};
}

struct SynthesisOptions {
    RiccatiMethod riccati = RiccatiMethod::upwind_euler;
    Quadrature quadrature = Quadrature::left;
    PsiMethod psi = PsiMethod::characteristics;
    double g_max = default_g_max;
};

inline FeedbackLaw synthesize(const ResolvedProblem& pr, const SynthesisOptions& opt = {}) {
    RiccatiSolution ric = solve_riccati(pr, opt.riccati, opt.quadrature, opt.g_max);
    auto phi_at = [&pr](double t) { return pr.phi_at(t); };
    const std::size_t nz = pr.grid.nz();
    if (pr.spec.target_mode == TargetMode::zero_case) {
        Field psi(pr.grid, 0.0);
        return build_feedback(std::move(ric), 0.0, std::vector<double>(nz, 0.0), std::vector<double>(nz, 0.0),
                              std::move(psi), opt.psi, pr.spec.b, pr.spec.r, pr.spec.target_mode);
    }
    double eta0 = compute_eta0(ric, phi_at, pr.spec.c);
    auto eta = resolve_eta(pr, eta0);
    auto gamma = compute_gamma(eta, phi_at, ric, pr.bbar, pr.spec.c);
    Field psi = solve_psi(gamma, ric, pr.spec.c, opt.psi);
    return build_feedback(std::move(ric), eta0, std::move(eta), std::move(gamma), std::move(psi), opt.psi,
                          pr.spec.b, pr.spec.r, pr.spec.target_mode);
}

}  // namespace hyperlq
