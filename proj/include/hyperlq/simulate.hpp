#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hyperlq/error.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/problem.hpp"
#include "hyperlq/synthesis.hpp"
#include "hyperlq/transport.hpp"

namespace hyperlq {

struct ResidualReport {
    double state_pde = 0.0;
    double costate_pde = 0.0;
    double terminal_costate = 0.0;
    double stationarity = 0.0;
    double transform = 0.0;
};

struct SolveResult {
    Field x;
    Field u;
    Field lambda;
    double terminal_error_inf = 0.0;
    ResidualReport residuals;
};

/// x_t - c x_z = A x + B with x(z,0) = varphi, x(l,t) = phi.
inline Field state_march(const ResolvedProblem& pr, TransportMethod method, const Coefficient& A,
                         const Coefficient& B) {
    MarchSpec spec;
    spec.direction = Direction::forward;
    spec.c = pr.spec.c;
    spec.start = pr.varphi_samples;
    spec.start_at = [&pr](double z) { return pr.varphi_at(z); };
    spec.boundary = pr.phi_samples;
    return march_linear(pr.grid, spec, method, A, B);
}

inline Field open_loop(const ResolvedProblem& pr, const Field& u, TransportMethod method = TransportMethod::upwind) {
    if (!(u.grid() == pr.grid)) throw ValidationError("grid mismatch in open_loop");
    return state_march(pr, method, Coefficient::value(pr.spec.a), Coefficient::of(u, pr.spec.b));
}

inline double terminal_error_inf(const Field& x, const std::vector<double>& eta) {
    const std::size_t kT = x.nt() - 1;
    double err = 0.0;
    for (std::size_t i = 0; i < x.nz(); ++i) err = std::max(err, std::abs(x.at(i, kT) - eta[i]));
    return err;
}

inline SolveResult closed_loop(const ResolvedProblem& pr, const FeedbackLaw& law,
                               TransportMethod method = TransportMethod::upwind) {
    if (!(law.grid() == pr.grid)) throw ValidationError("feedback law is on a different grid");
    Field x = state_march(pr, method, Coefficient::of(law.riccati.abar), Coefficient::of(law.psi, pr.bbar));
    Field u(pr.grid), lambda(pr.grid);
    for (std::size_t k = 0; k < pr.grid.nt(); ++k)
        for (std::size_t i = 0; i < pr.grid.nz(); ++i) {
            double lam = law.costate(i, k, x.at(i, k));
            lambda.at(i, k) = lam;
            u.at(i, k) = -(law.b / law.r) * lam;
        }
    double err = terminal_error_inf(x, law.eta);
    return SolveResult{std::move(x), std::move(u), std::move(lambda), err, {}};
}

/// lambda_s + c lambda_z = a lambda + q x, lambda(z,T) = p x(z,T) + gamma, lambda(0,t) = 0.
inline Field costate_solve(const ResolvedProblem& pr, const Field& x, const std::vector<double>& gamma,
                           TransportMethod method = TransportMethod::upwind) {
    const UniformGrid& g = pr.grid;
    if (!(x.grid() == g)) throw ValidationError("grid mismatch in costate_solve");
    MarchSpec spec;
    spec.direction = Direction::backward;
    spec.c = pr.spec.c;
    spec.start.resize(g.nz());
    for (std::size_t i = 0; i < g.nz(); ++i) spec.start[i] = pr.p_samples[i] * x.at(i, g.nt() - 1) + gamma[i];
    spec.boundary.assign(g.nt(), 0.0);
    return march_linear(g, spec, method, Coefficient::value(pr.spec.a), Coefficient::of(x, pr.spec.q));
}

/// x*(z,T) = phi(T-(l-z)/c)/e(z,T) + gamma(z) (bbar/c) e(z,T)^-2 integral_z^l e(xi, T-(xi-z)/c)^2 dxi.
inline std::vector<double> closed_form_terminal(const FeedbackLaw& law, const ResolvedProblem& pr) {
    const UniformGrid& g = pr.grid;
    const std::size_t nz = g.nz(), kT = g.nt() - 1;
    const double c = pr.spec.c;
    std::vector<double> out(nz), sq(nz);
    for (std::size_t i = 0; i < nz; ++i) {
        double eT = law.riccati.e.at(i, kT);
        double integral = 0.0;
        if (i + 1 < nz) {
            for (std::size_t j = i; j < nz; ++j) {
                double ej = e_on_final_characteristic(law.riccati.e, c, i, j);
                sq[j] = ej * ej;
            }
            integral = trapezoid_z(std::span<const double>(sq).subspan(i), g.h());
        }
        out[i] = pr.phi_at(g.T() - (g.l() - g.z(i)) / c) / eT + law.gamma[i] * (pr.bbar / c) * integral / (eT * eT);
    }
    return out;
}

/// True when node (i,k) is near a characteristic through the corners (l,0) or
/// (0,T); the solution is only Lipschitz across those lines.
inline bool near_kink(const UniformGrid& g, double c, std::size_t i, std::size_t k) {
    double band = 2.0 * std::max(g.h(), c * g.tau());
    double s = g.z(i) + c * g.t(k);
    return std::abs(s - g.l()) <= band || std::abs(s - c * g.T()) <= band;
}

inline ResidualReport residuals(const SolveResult& res, const FeedbackLaw& law, const ResolvedProblem& pr,
                                bool exclude_kinks = true) {
    const UniformGrid& g = pr.grid;
    const std::size_t nz = g.nz(), nt = g.nt(), kT = nt - 1;
    const double h = g.h(), tau = g.tau();
    const double a = pr.spec.a, b = pr.spec.b, c = pr.spec.c, q = pr.spec.q, r = pr.spec.r;
    const Field& x = res.x;
    const Field& lam = res.lambda;
    const Field& e = law.riccati.e;
    ResidualReport rep;

    for (std::size_t k = 2; k + 2 < nt; ++k)
        for (std::size_t i = 2; i + 2 < nz; ++i) {
            if (exclude_kinks && near_kink(g, c, i, k)) continue;
            double xt = (x.at(i, k + 1) - x.at(i, k - 1)) / (2.0 * tau);
            double xz = (x.at(i + 1, k) - x.at(i - 1, k)) / (2.0 * h);
            rep.state_pde = std::max(rep.state_pde, std::abs(xt - c * xz - a * x.at(i, k) - b * res.u.at(i, k)));

            double lt = (lam.at(i, k + 1) - lam.at(i, k - 1)) / (2.0 * tau);
            double lz = (lam.at(i + 1, k) - lam.at(i - 1, k)) / (2.0 * h);
            rep.costate_pde =
                std::max(rep.costate_pde, std::abs(lt - c * lz + a * lam.at(i, k) + q * x.at(i, k)));

            if (e.valid(i, k - 1) && e.valid(i - 1, k) && e.valid(i, k) && e.valid(i, k + 1) && e.valid(i + 1, k)) {
                auto w = [&](std::size_t ii, std::size_t kk) { return e.at(ii, kk) * x.at(ii, kk); };
                double wt = (w(i, k + 1) - w(i, k - 1)) / (2.0 * tau);
                double wz = (w(i + 1, k) - w(i - 1, k)) / (2.0 * h);
                rep.transform = std::max(rep.transform,
                                         std::abs(wt - c * wz - e.at(i, k) * pr.bbar * law.psi.at(i, k)));
            }
        }
    for (std::size_t i = 0; i < nz; ++i)
        rep.terminal_costate = std::max(
            rep.terminal_costate, std::abs(lam.at(i, kT) - pr.p_samples[i] * x.at(i, kT) - law.gamma[i]));
    for (std::size_t n = 0; n < g.size(); ++n)
        rep.stationarity = std::max(rep.stationarity, std::abs(r * res.u.values()[n] + b * lam.values()[n]));
    return rep;
}

/// Feedback on [0,T], then u = 0 up to t_end. Returns the state on [0, t_end].
inline Field extended_stabilization(const ResolvedProblem& pr, const Field& x_closed, double t_end,
                                    TransportMethod method = TransportMethod::upwind) {
    if (pr.spec.target_mode != TargetMode::zero_case)
        throw ValidationError("extended stabilization needs target_mode zero_case");
    const UniformGrid& g = pr.grid;
    if (!(t_end > g.T()) || t_end > 3.0 * g.T() * (1.0 + 1e-12))
        throw ValidationError("t_end must lie in (T, 3T]");
    const double tau = g.tau();
    std::size_t extra = static_cast<std::size_t>(std::ceil((t_end - g.T()) / tau - 1e-9));
    extra = std::max<std::size_t>(extra, 2);
    UniformGrid tail(g.nz(), extra + 1, g.l(), tau * static_cast<double>(extra));

    MarchSpec spec;
    spec.direction = Direction::forward;
    spec.c = pr.spec.c;
    spec.start.assign(x_closed.level(g.nt() - 1).begin(), x_closed.level(g.nt() - 1).end());
    spec.boundary.resize(tail.nt());
    for (std::size_t k = 0; k < tail.nt(); ++k) spec.boundary[k] = pr.phi_at(g.T() + tail.t(k));
    spec.boundary[0] = spec.start[g.nz() - 1];
    Field rest = march_linear(tail, spec, method, Coefficient::value(pr.spec.a), Coefficient::value(0.0));

    UniformGrid full(g.nz(), g.nt() + extra, g.l(), g.T() + tail.T());
    Field out(full);
    for (std::size_t k = 0; k < g.nt(); ++k)
        std::copy(x_closed.level(k).begin(), x_closed.level(k).end(), out.level(k).begin());
    for (std::size_t k = 1; k < tail.nt(); ++k)
        std::copy(rest.level(k).begin(), rest.level(k).end(), out.level(g.nt() - 1 + k).begin());
    return out;
}

}  // namespace hyperlq
