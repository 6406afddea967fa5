#pragma once

// Explicit marchers for scalar transport equations with a pointwise source.
//
//   forward:   U_t - c U_z = F(z,t,U),  U(z,0) given,  U(l,t) given
//   backward:  U_s + c U_z = F(z,t,U),  s = T - t,  U(z,T) given,  U(0,t) given
//
// Two discretizations: first-order upwind, and a characteristic tracer that
// follows each node's characteristic back one spatial cell (or to the start
// plane) and integrates the source ODE along it with RK4.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hyperlq/error.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/parallel.hpp"

namespace hyperlq {

enum class TransportMethod { upwind, characteristics };
enum class Direction { forward, backward };

inline const char* to_string(TransportMethod m) {
    return m == TransportMethod::upwind ? "upwind" : "characteristics";
}

inline void check_cfl_value(double nu) {
    if (nu > 1.0 + 1e-12)
        throw ValidationError("CFL number c*tau/h = " + std::to_string(nu) + " exceeds 1");
}

/// constant + scale * field (field optional).
struct Coefficient {
    const Field* field = nullptr;
    double scale = 1.0;
    double constant = 0.0;

    static Coefficient value(double v) { return {nullptr, 0.0, v}; }
    static Coefficient of(const Field& f, double scale = 1.0, double constant = 0.0) {
        return {&f, scale, constant};
    }

    double node(std::size_t i, std::size_t k) const {
        return field ? constant + scale * field->at(i, k) : constant;
    }
    double sample(double z, double t) const {
        return field ? constant + scale * bilinear(*field, z, t) : constant;
    }
};

struct MarchSpec {
    Direction direction = Direction::forward;
    double c = 1.0;
    std::vector<double> start;                 // values on the start plane (t=0 or t=T)
    std::function<double(double)> start_at;    // start data off the nodes; optional
    std::vector<double> boundary;              // pinned column, indexed by time level
    std::function<void(std::size_t, std::span<const double>)> on_level;  // called per finished level
};

namespace detail {

inline void check_march(const UniformGrid& g, const MarchSpec& spec) {
    if (spec.start.size() != g.nz() || spec.boundary.size() != g.nt())
        throw ValidationError("march data sizes do not match the grid");
    check_cfl_value(g.cfl(spec.c));
}

inline void check_level(const UniformGrid& g, std::span<const double> row, std::size_t k) {
    for (std::size_t i = 0; i < row.size(); ++i)
        if (!std::isfinite(row[i]))
            throw NumericalError("non-finite value at z=" + std::to_string(g.z(i)) + ", t=" + std::to_string(g.t(k)));
}

struct MarchFrame {
    std::size_t nz, nt;
    bool forward;
    std::size_t pinned;  // index of the boundary column
    int offset;          // upwind neighbour

    explicit MarchFrame(const UniformGrid& g, Direction d)
        : nz(g.nz()), nt(g.nt()), forward(d == Direction::forward),
          pinned(forward ? g.nz() - 1 : 0), offset(forward ? 1 : -1) {}

    // Time level of march step n.
    std::size_t level(std::size_t n) const { return forward ? n : nt - 1 - n; }
};

}  // namespace detail

/// Upwind march. rhs(i, k, U) is the source at node (i, k).
template <typename NodeRhs>
Field march_upwind(const UniformGrid& g, const MarchSpec& spec, NodeRhs&& rhs) {
    detail::check_march(g, spec);
    detail::MarchFrame fr(g, spec.direction);
    const double lam = g.cfl(spec.c);
    const double tau = g.tau();
    Field out(g);
    {
        auto row = out.level(fr.level(0));
        for (std::size_t i = 0; i < g.nz(); ++i) row[i] = spec.start[i];
        row[fr.pinned] = spec.boundary[fr.level(0)];
        if (spec.on_level) spec.on_level(fr.level(0), row);
        detail::check_level(g, row, fr.level(0));
    }
    for (std::size_t n = 1; n < g.nt(); ++n) {
        std::size_t k = fr.level(n), kp = fr.level(n - 1);
        auto prev = out.level(kp);
        auto row = out.level(k);
        parallel_for(g.nz(), [&](std::size_t i) {
            if (i == fr.pinned) return;
            double u = prev[i];
            double nb = prev[static_cast<std::size_t>(static_cast<long>(i) + fr.offset)];
            row[i] = u + lam * (nb - u) + tau * rhs(i, kp, u);
        });
        row[fr.pinned] = spec.boundary[k];
        if (spec.on_level) spec.on_level(k, row);
        detail::check_level(g, row, k);
    }
    return out;
}

/// Characteristic march. rhs(z, t, U) is the source at an arbitrary point.
template <typename PointRhs>
Field march_characteristics(const UniformGrid& g, const MarchSpec& spec, PointRhs&& rhs) {
    detail::check_march(g, spec);
    detail::MarchFrame fr(g, spec.direction);
    const double tau = g.tau();
    const double h = g.h();
    const double c = spec.c;
    const double T = g.T();
    // Steps needed to cross one cell.
    double d = h / (c * tau);
    if (std::abs(d - std::round(d)) < 1e-9) d = std::round(d);
    const double dir = fr.forward ? 1.0 : -1.0;

    auto start_value = [&](double z) {
        if (spec.start_at) return spec.start_at(z);
        return interp_space(spec.start, h, z);
    };
    auto time_of = [&](double sigma) { return fr.forward ? sigma : T - sigma; };

    Field out(g);
    {
        auto row = out.level(fr.level(0));
        for (std::size_t i = 0; i < g.nz(); ++i) row[i] = spec.start[i];
        row[fr.pinned] = spec.boundary[fr.level(0)];
        if (spec.on_level) spec.on_level(fr.level(0), row);
        detail::check_level(g, row, fr.level(0));
    }
    for (std::size_t n = 1; n < g.nt(); ++n) {
        const std::size_t k = fr.level(n);
        const double sigma_n = static_cast<double>(n) * tau;
        auto row = out.level(k);
        parallel_for(g.nz(), [&](std::size_t i) {
            if (i == fr.pinned) return;
            const double zi = g.z(i);
            double u, duration;
            if (static_cast<double>(n) >= d - 1e-9) {
                duration = d * tau;
                std::size_t nb = static_cast<std::size_t>(static_cast<long>(i) + fr.offset);
                u = interp_time(out, nb, time_of(sigma_n - duration));
            } else {
                duration = sigma_n;
                u = start_value(zi + dir * c * sigma_n);
            }
            std::size_t steps = static_cast<std::size_t>(std::ceil(duration / tau - 1e-9));
            if (steps == 0) steps = 1;
            const double dt = duration / static_cast<double>(steps);
            // Point on the characteristic at march time sigma.
            auto f = [&](double sigma, double v) {
                return rhs(zi + dir * c * (sigma_n - sigma), time_of(sigma), v);
            };
            double sigma = sigma_n - duration;
            for (std::size_t j = 0; j < steps; ++j) {
                double k1 = f(sigma, u);
                double k2 = f(sigma + 0.5 * dt, u + 0.5 * dt * k1);
                double k3 = f(sigma + 0.5 * dt, u + 0.5 * dt * k2);
                double k4 = f(sigma + dt, u + dt * k3);
                u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                sigma += dt;
            }
            row[i] = u;
        });
        row[fr.pinned] = spec.boundary[k];
        if (spec.on_level) spec.on_level(k, row);
        detail::check_level(g, row, k);
    }
    return out;
}

/// U' = A U + B along characteristics, by either method.
inline Field march_linear(const UniformGrid& g, const MarchSpec& spec, TransportMethod method,
                          const Coefficient& A, const Coefficient& B) {
    if (method == TransportMethod::upwind)
        return march_upwind(g, spec, [&](std::size_t i, std::size_t k, double u) {
            return A.node(i, k) * u + B.node(i, k);
        });
    return march_characteristics(g, spec, [&](double z, double t, double u) {
        return A.sample(z, t) * u + B.sample(z, t);
    });
}

}  // namespace hyperlq
