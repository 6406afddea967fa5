#pragma once

// Brute-force check of the synthesis: the upwind-discretized problem as an
// equality-constrained QP in the controls, solved through its KKT system.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperlq/cost.hpp"
#include "hyperlq/error.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/problem.hpp"

namespace hyperlq {

inline constexpr std::size_t oracle_budget = 20000;

/// x_{k+1} = M x_k + N u_k + inject_k,  k = 0..steps-1, x_steps = target.
/// Cost: constant + 1/2 sum_k x_k' diag(state_weight_k) x_k + 1/2 sum_k u_k' diag(control_weight_k) u_k.
struct DiscreteLQ {
    Eigen::MatrixXd M;
    Eigen::MatrixXd N;
    std::vector<Eigen::VectorXd> inject;
    Eigen::VectorXd x0;
    std::vector<Eigen::VectorXd> state_weight;    // steps + 1 entries
    std::vector<Eigen::VectorXd> control_weight;  // steps entries
    Eigen::VectorXd target;
    double constant = 0.0;

    // Set by discretize(): the lattice and the pinned boundary column.
    std::optional<UniformGrid> grid;
    std::vector<double> boundary;

    std::size_t states() const { return static_cast<std::size_t>(M.rows()); }
    std::size_t controls() const { return static_cast<std::size_t>(N.cols()); }
    std::size_t steps() const { return inject.size(); }
    std::size_t unknowns() const { return controls() * steps(); }
};

struct OracleResult {
    Eigen::VectorXd u;                 // stacked by step: u[k*m + j]
    std::vector<Eigen::VectorXd> x;    // steps + 1 state vectors
    double cost = 0.0;
    Eigen::VectorXd multipliers;       // H u + f + C' mu = 0
    double kkt_residual = 0.0;         // relative to the system scale
    double certificate = 0.0;          // null-space projected gradient, relative
    double terminal_violation = 0.0;
    double scale = 1.0;
};

inline void check_shapes(const DiscreteLQ& d) {
    const std::size_t n = d.states(), m = d.controls(), K = d.steps();
    bool ok = d.M.cols() == static_cast<Eigen::Index>(n) && d.N.rows() == static_cast<Eigen::Index>(n) &&
              d.x0.size() == static_cast<Eigen::Index>(n) && d.target.size() == static_cast<Eigen::Index>(n) &&
              d.state_weight.size() == K + 1 && d.control_weight.size() == K && K > 0;
    for (const auto& v : d.inject) ok = ok && v.size() == static_cast<Eigen::Index>(n);
    for (const auto& v : d.state_weight) ok = ok && v.size() == static_cast<Eigen::Index>(n);
    for (const auto& v : d.control_weight) ok = ok && v.size() == static_cast<Eigen::Index>(m);
    if (!ok) throw ValidationError("inconsistent discrete LQ dimensions");
    if (d.unknowns() > oracle_budget)
        throw ValidationError("oracle problem has " + std::to_string(d.unknowns()) + " unknowns; budget is " +
                              std::to_string(oracle_budget));
}

/// States generated by a control sequence.
inline std::vector<Eigen::VectorXd> simulate_discrete(const DiscreteLQ& d, const Eigen::VectorXd& u) {
    const std::size_t m = d.controls();
    std::vector<Eigen::VectorXd> x(d.steps() + 1);
    x[0] = d.x0;
    for (std::size_t k = 0; k < d.steps(); ++k)
        x[k + 1] = d.M * x[k] + d.N * u.segment(static_cast<Eigen::Index>(k * m), static_cast<Eigen::Index>(m)) +
                   d.inject[k];
    return x;
}

inline double discrete_cost(const DiscreteLQ& d, const Eigen::VectorXd& u) {
    auto x = simulate_discrete(d, u);
    const std::size_t m = d.controls();
    double J = d.constant;
    for (std::size_t k = 0; k <= d.steps(); ++k) J += 0.5 * x[k].dot(d.state_weight[k].cwiseProduct(x[k]));
    for (std::size_t k = 0; k < d.steps(); ++k) {
        auto uk = u.segment(static_cast<Eigen::Index>(k * m), static_cast<Eigen::Index>(m));
        J += 0.5 * uk.dot(d.control_weight[k].cwiseProduct(uk));
    }
    return J;
}

/// Upwind closed form of the problem on a coarse grid. States are the nodes
/// z_0..z_{nz-2}; the node z = l is pinned to phi and enters through inject.
inline DiscreteLQ discretize(const ResolvedProblem& pr, const std::vector<double>& eta) {
    const UniformGrid& g = pr.grid;
    check_cfl(g, pr.spec.c);
    const std::size_t nz = g.nz(), nt = g.nt(), n = nz - 1, K = nt - 1;
    if (n * K > oracle_budget)
        throw ValidationError("oracle grid has " + std::to_string(n * K) + " control unknowns; budget is " +
                              std::to_string(oracle_budget));
    if (eta.size() != nz) throw ValidationError("target samples do not match the oracle grid");
    const double h = g.h(), tau = g.tau(), lam = g.cfl(pr.spec.c);
    const double a = pr.spec.a, b = pr.spec.b, q = pr.spec.q, r = pr.spec.r;
    auto wz = [&](std::size_t i) { return (i == 0 || i + 1 == nz) ? 0.5 * h : h; };
    auto wt = [&](std::size_t k) { return (k == 0 || k + 1 == nt) ? 0.5 * tau : tau; };

    DiscreteLQ d;
    Eigen::Index ni = static_cast<Eigen::Index>(n);
    d.M = Eigen::MatrixXd::Zero(ni, ni);
    for (std::size_t i = 0; i < n; ++i) {
        d.M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 - lam + tau * a;
        if (i + 1 < n) d.M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = lam;
    }
    d.N = tau * b * Eigen::MatrixXd::Identity(ni, ni);
    d.inject.assign(K, Eigen::VectorXd::Zero(ni));
    for (std::size_t k = 0; k < K; ++k) d.inject[k](ni - 1) = lam * pr.phi_samples[k];
    d.x0 = Eigen::Map<const Eigen::VectorXd>(pr.varphi_samples.data(), ni);
    d.state_weight.resize(K + 1);
    d.control_weight.resize(K);
    for (std::size_t k = 0; k <= K; ++k) {
        d.state_weight[k].resize(ni);
        for (std::size_t i = 0; i < n; ++i) d.state_weight[k](static_cast<Eigen::Index>(i)) = q * wz(i) * wt(k);
        if (k < K) {
            d.control_weight[k].resize(ni);
            for (std::size_t i = 0; i < n; ++i) d.control_weight[k](static_cast<Eigen::Index>(i)) = r * wz(i) * wt(k);
        }
    }
    for (std::size_t i = 0; i < n; ++i) d.state_weight[K](static_cast<Eigen::Index>(i)) += pr.p_samples[i] * wz(i);
    d.target = Eigen::Map<const Eigen::VectorXd>(eta.data(), ni);
    // Fixed contribution of the pinned node z = l.
    double cst = 0.0;
    for (std::size_t k = 0; k < nt; ++k) cst += q * wz(nz - 1) * wt(k) * pr.phi_samples[k] * pr.phi_samples[k];
    cst += pr.p_samples[nz - 1] * wz(nz - 1) * pr.phi_samples[K] * pr.phi_samples[K];
    d.constant = 0.5 * cst;
    d.grid = g;
    d.boundary = pr.phi_samples;
    return d;
}

inline OracleResult solve_kkt(const DiscreteLQ& d) {
    check_shapes(d);
    const Eigen::Index n = static_cast<Eigen::Index>(d.states());
    const Eigen::Index m = static_cast<Eigen::Index>(d.controls());
    const std::size_t K = d.steps();
    const Eigen::Index U = m * static_cast<Eigen::Index>(K);

    // x_k = G_k u + s_k; accumulate the reduced quadratic as we go.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, U);
    Eigen::VectorXd s = d.x0;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(U, U);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(U);
    double c0 = d.constant;
    auto accumulate = [&](std::size_t k) {
        const Eigen::VectorXd& w = d.state_weight[k];
        Eigen::Index used = m * static_cast<Eigen::Index>(k);
        if (used > 0) {
            auto Gk = G.leftCols(used);
            H.topLeftCorner(used, used).noalias() += Gk.transpose() * w.asDiagonal() * Gk;
            f.head(used).noalias() += Gk.transpose() * w.cwiseProduct(s);
        }
        c0 += 0.5 * s.dot(w.cwiseProduct(s));
    };
    accumulate(0);
    for (std::size_t k = 0; k < K; ++k) {
        Eigen::Index used = m * static_cast<Eigen::Index>(k + 1);
        Eigen::MatrixXd next = d.M * G.leftCols(used);
        next.rightCols(m) += d.N;
        G.leftCols(used) = next;
        s = d.M * s + d.inject[k];
        accumulate(k + 1);
        H.diagonal().segment(m * static_cast<Eigen::Index>(k), m) += d.control_weight[k];
    }
    const Eigen::MatrixXd& C = G;
    Eigen::VectorXd rhs = d.target - s;

    Eigen::LLT<Eigen::MatrixXd> hf(H);
    if (hf.info() != Eigen::Success) throw NumericalError("oracle Hessian is not positive definite");
    Eigen::MatrixXd Y = hf.solve(C.transpose());
    Eigen::MatrixXd S = C * Y;
    Eigen::LLT<Eigen::MatrixXd> sf(S);
    double smax = S.diagonal().cwiseAbs().maxCoeff();
    bool singular = sf.info() != Eigen::Success || !(smax > 0.0);
    if (!singular) {
        const auto& L = sf.matrixLLT();
        double dmin = L.diagonal().cwiseAbs().minCoeff();
        singular = dmin * dmin < 1e-14 * smax;
    }
    if (singular) throw NumericalError("terminal state unreachable on this grid");

    Eigen::VectorXd Hf = hf.solve(f);
    // C u = rhs with u = -H^{-1}(f + C' mu)  =>  S mu = -(rhs + C H^{-1} f)
    Eigen::VectorXd mu = sf.solve(-(rhs + C * Hf));
    Eigen::VectorXd u = -(Hf + Y * mu);

    OracleResult out;
    out.u = u;
    out.multipliers = mu;
    out.x = simulate_discrete(d, u);
    out.cost = 0.5 * u.dot(H * u) + f.dot(u) + c0;
    Eigen::VectorXd grad = H * u + f;
    Eigen::VectorXd r1 = grad + C.transpose() * mu;
    Eigen::VectorXd r2 = C * u - rhs;
    out.scale = std::max({1.0, H.cwiseAbs().maxCoeff() * u.cwiseAbs().maxCoeff(),
                          C.cwiseAbs().maxCoeff() * mu.cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff(),
                          rhs.cwiseAbs().maxCoeff()});
    out.kkt_residual = std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff()) / out.scale;
    Eigen::MatrixXd CCt = C * C.transpose();
    Eigen::VectorXd proj = grad - C.transpose() * CCt.ldlt().solve(C * grad);
    out.certificate = proj.cwiseAbs().maxCoeff() / out.scale;
    out.terminal_violation = (out.x.back() - d.target).cwiseAbs().maxCoeff();
    return out;
}

/// Oracle control and state as fields on the discretization grid. Controls at
/// the pinned node and at the last level carry no decision and are zero.
inline Field oracle_control_field(const DiscreteLQ& d, const OracleResult& res) {
    if (!d.grid) throw ValidationError("discrete problem has no grid");
    Field u(*d.grid, 0.0);
    const std::size_t m = d.controls();
    for (std::size_t k = 0; k < d.steps(); ++k)
        for (std::size_t i = 0; i < m; ++i) u.at(i, k) = res.u(static_cast<Eigen::Index>(k * m + i));
    return u;
}

inline Field oracle_state_field(const DiscreteLQ& d, const OracleResult& res) {
    if (!d.grid) throw ValidationError("discrete problem has no grid");
    Field x(*d.grid, 0.0);
    const std::size_t n = d.states();
    for (std::size_t k = 0; k <= d.steps(); ++k) {
        for (std::size_t i = 0; i < n; ++i) x.at(i, k) = res.x[k](static_cast<Eigen::Index>(i));
        x.at(n, k) = d.boundary[k];
    }
    return x;
}

/// Samples f at the nodes of another grid (bilinear).
inline Field restrict_to(const Field& f, const UniformGrid& target) {
    Field out(target);
    for (std::size_t k = 0; k < target.nt(); ++k)
        for (std::size_t i = 0; i < target.nz(); ++i) out.at(i, k) = bilinear(f, target.z(i), target.t(k));
    return out;
}

struct OracleComparison {
    double cost_oracle = 0.0;
    double cost_analytic = 0.0;
    double cost_gap = 0.0;
    double control_rms_gap = 0.0;
    double multiplier_scale = 0.0;
    double multiplier_correlation = 0.0;
};

/// Gaps between the oracle and an analytic control (any grid) with its cost,
/// plus the fitted scale and correlation of the terminal multipliers against gamma.
inline OracleComparison compare(const DiscreteLQ& d, const OracleResult& res, const Field& u_analytic,
                                double cost_analytic, const std::vector<double>& gamma_coarse) {
    if (!d.grid) throw ValidationError("discrete problem has no grid");
    OracleComparison out;
    out.cost_oracle = res.cost;
    out.cost_analytic = cost_analytic;
    out.cost_gap = relative_gap(res.cost, cost_analytic);

    Field ua = u_analytic.grid() == *d.grid ? u_analytic : restrict_to(u_analytic, *d.grid);
    const std::size_t m = d.controls();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < d.steps(); ++k)
        for (std::size_t i = 0; i < m; ++i) {
            double diff = res.u(static_cast<Eigen::Index>(k * m + i)) - ua.at(i, k);
            num += diff * diff;
            den += ua.at(i, k) * ua.at(i, k);
        }
    out.control_rms_gap = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);

    const std::size_t n = d.states();
    double gg = 0.0, mg = 0.0, mean_m = 0.0, mean_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gg += gamma_coarse[i] * gamma_coarse[i];
        mg += res.multipliers(static_cast<Eigen::Index>(i)) * gamma_coarse[i];
        mean_m += res.multipliers(static_cast<Eigen::Index>(i));
        mean_g += gamma_coarse[i];
    }
    out.multiplier_scale = gg > 0.0 ? mg / gg : 0.0;
    mean_m /= static_cast<double>(n);
    mean_g /= static_cast<double>(n);
    double smm = 0.0, sgg = 0.0, smg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dm = res.multipliers(static_cast<Eigen::Index>(i)) - mean_m, dg = gamma_coarse[i] - mean_g;
        smm += dm * dm;
        sgg += dg * dg;
        smg += dm * dg;
    }
    out.multiplier_correlation = (smm > 0.0 && sgg > 0.0) ? smg / std::sqrt(smm * sgg) : 0.0;
    return out;
}

}  // namespace hyperlq
