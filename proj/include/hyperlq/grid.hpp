#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hyperlq/error.hpp"

namespace hyperlq {

/// Uniform lattice on [0,l] x [0,T]: node (i,k) sits at (i*h, k*tau).
class UniformGrid {
public:
    UniformGrid(std::size_t nz, std::size_t nt, double l, double T) : nz_(nz), nt_(nt), l_(l), T_(T) {
        if (nz < 3 || nt < 3)
            throw ValidationError("grid needs at least 3 nodes per axis (got nz=" + std::to_string(nz) +
                                  ", nt=" + std::to_string(nt) + ")");
        if (!(l > 0.0) || !(T > 0.0) || !std::isfinite(l) || !std::isfinite(T))
            throw ValidationError("grid extents must be positive and finite");
    }

    /// Builds the grid from step sizes; each step must divide its extent.
    static UniformGrid from_steps(double l, double T, double h, double tau) {
        if (!(h > 0.0) || !(tau > 0.0)) throw ValidationError("grid steps must be positive");
        return UniformGrid(count(l, h, "h"), count(T, tau, "tau"), l, T);
    }

    std::size_t nz() const { return nz_; }
    std::size_t nt() const { return nt_; }
    double l() const { return l_; }
    double T() const { return T_; }
    double h() const { return l_ / static_cast<double>(nz_ - 1); }
    double tau() const { return T_ / static_cast<double>(nt_ - 1); }
    double z(std::size_t i) const { return l_ * static_cast<double>(i) / static_cast<double>(nz_ - 1); }
    double t(std::size_t k) const { return T_ * static_cast<double>(k) / static_cast<double>(nt_ - 1); }
    double cfl(double c) const { return c * tau() / h(); }
    std::size_t size() const { return nz_ * nt_; }

    friend bool operator==(const UniformGrid& a, const UniformGrid& b) {
        return a.nz_ == b.nz_ && a.nt_ == b.nt_ && a.l_ == b.l_ && a.T_ == b.T_;
    }

private:
    static std::size_t count(double extent, double step, const char* name) {
        double cells = extent / step;
        double rounded = std::round(cells);
        if (rounded < 2.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
            throw ValidationError(std::string(name) + "=" + std::to_string(step) +
                                  " does not divide the extent " + std::to_string(extent));
        return static_cast<std::size_t>(rounded) + 1;
    }

    std::size_t nz_, nt_;
    double l_, T_;
};

/// Scalar function sampled on a grid, with an optional validity mask.
class Field {
public:
    explicit Field(const UniformGrid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.size(), fill) {}

    const UniformGrid& grid() const { return grid_; }
    std::size_t nz() const { return grid_.nz(); }
    std::size_t nt() const { return grid_.nt(); }

    double& at(std::size_t i, std::size_t k) { return values_[k * grid_.nz() + i]; }
    double at(std::size_t i, std::size_t k) const { return values_[k * grid_.nz() + i]; }

    /// Contiguous spatial row at level k.
    std::span<double> level(std::size_t k) { return {values_.data() + k * grid_.nz(), grid_.nz()}; }
    std::span<const double> level(std::size_t k) const {
        return {values_.data() + k * grid_.nz(), grid_.nz()};
    }

    std::vector<double> column(std::size_t i) const {
        std::vector<double> out(grid_.nt());
        for (std::size_t k = 0; k < grid_.nt(); ++k) out[k] = at(i, k);
        return out;
    }

    bool masked() const { return !valid_.empty(); }
    bool valid(std::size_t i, std::size_t k) const {
        return valid_.empty() || valid_[k * grid_.nz() + i] != 0;
    }
    void set_valid(std::size_t i, std::size_t k, bool v) {
        if (valid_.empty()) valid_.assign(grid_.size(), 1);
        valid_[k * grid_.nz() + i] = v ? 1 : 0;
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Max |value| over valid nodes.
    double max_abs() const {
        double m = 0.0;
        for (std::size_t n = 0; n < values_.size(); ++n)
            if (valid_.empty() || valid_[n]) m = std::max(m, std::abs(values_[n]));
        return m;
    }

private:
    UniformGrid grid_;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
};

inline void require_same_grid(const Field& a, const Field& b, const char* what) {
    if (!(a.grid() == b.grid())) throw ValidationError(std::string("grid mismatch in ") + what);
}

/// Composite trapezoid rule.
inline double trapezoid_z(std::span<const double> samples, double h) {
    if (samples.size() < 2) throw ValidationError("trapezoid needs at least 2 samples");
    double sum = 0.5 * (samples.front() + samples.back());
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) sum += samples[i];
    double out = sum * h;
    if (!std::isfinite(out)) throw NumericalError("non-finite value in trapezoid_z");
    return out;
}

/// Tensor-product trapezoid over [0,l] x [0,T]; every node must be valid.
inline double trapezoid_zt(const Field& f) {
    const auto& g = f.grid();
    double total = 0.0;
    for (std::size_t k = 0; k < g.nt(); ++k) {
        double wk = (k == 0 || k + 1 == g.nt()) ? 0.5 : 1.0;
        double row = 0.0;
        for (std::size_t i = 0; i < g.nz(); ++i) {
            if (!f.valid(i, k))
                throw NumericalError("trapezoid_zt: masked node at z=" + std::to_string(g.z(i)) +
                                     ", t=" + std::to_string(g.t(k)));
            double wi = (i == 0 || i + 1 == g.nz()) ? 0.5 : 1.0;
            row += wi * f.at(i, k);
        }
        total += wk * row;
    }
    double out = total * g.h() * g.tau();
    if (!std::isfinite(out)) throw NumericalError("non-finite value in trapezoid_zt");
    return out;
}

namespace detail {
// Splits coordinate x / step into (lower index, fraction), snapping to nodes.
inline void locate(double x, double step, std::size_t n, std::size_t& k0, double& frac) {
    double s = x / step;
    double fl = std::floor(s);
    frac = s - fl;
    if (fl < 0.0) {
        fl = 0.0;
        frac = 0.0;
    }
    k0 = static_cast<std::size_t>(fl);
    if (frac > 1.0 - 1e-9) {
        ++k0;
        frac = 0.0;
    } else if (frac < 1e-9) {
        frac = 0.0;
    }
    if (k0 >= n - 1) {
        k0 = n - 1;
        frac = 0.0;
    }
}
}  // namespace detail

/// Linear interpolation in time at spatial index i.
inline double interp_time(const Field& f, std::size_t i, double t) {
    const auto& g = f.grid();
    double slack = 1e-12 * g.T();
    if (i >= g.nz() || t < -slack || t > g.T() + slack)
        throw NumericalError("interp_time out of range: i=" + std::to_string(i) + ", t=" + std::to_string(t));
    std::size_t k0;
    double w;
    detail::locate(std::clamp(t, 0.0, g.T()), g.tau(), g.nt(), k0, w);
    if (!f.valid(i, k0) || (w > 0.0 && !f.valid(i, k0 + 1)))
        throw NumericalError("interp_time hit a masked node at z=" + std::to_string(g.z(i)) +
                             ", t=" + std::to_string(t));
    if (w == 0.0) return f.at(i, k0);
    return (1.0 - w) * f.at(i, k0) + w * f.at(i, k0 + 1);
}

/// Linear interpolation of nodal samples on [0, (n-1)h]; clamps outside.
inline double interp_space(std::span<const double> samples, double h, double z) {
    std::size_t i0;
    double w;
    detail::locate(std::max(z, 0.0), h, samples.size(), i0, w);
    if (w == 0.0) return samples[i0];
    return (1.0 - w) * samples[i0] + w * samples[i0 + 1];
}

/// Bilinear sample; coordinates are clamped to the rectangle. Mask is ignored.
inline double bilinear(const Field& f, double z, double t) {
    const auto& g = f.grid();
    std::size_t i0, k0;
    double wz, wt;
    detail::locate(std::clamp(z, 0.0, g.l()), g.h(), g.nz(), i0, wz);
    detail::locate(std::clamp(t, 0.0, g.T()), g.tau(), g.nt(), k0, wt);
    std::size_t i1 = wz > 0.0 ? i0 + 1 : i0;
    std::size_t k1 = wt > 0.0 ? k0 + 1 : k0;
    double lo = (1.0 - wz) * f.at(i0, k0) + wz * f.at(i1, k0);
    if (wt == 0.0) return lo;
    double hi = (1.0 - wz) * f.at(i0, k1) + wz * f.at(i1, k1);
    return (1.0 - wt) * lo + wt * hi;
}

/// Long-format CSV `z,t,value`. Masked nodes are skipped; the last index of
/// each axis is always written.
inline void write_field_csv(std::ostream& os, const Field& f, std::size_t stride = 1) {
    const auto& g = f.grid();
    stride = std::max<std::size_t>(stride, 1);
    auto keep = [stride](std::size_t idx, std::size_t n) { return idx % stride == 0 || idx + 1 == n; };
    os << "z,t,value\n";
    char buf[96];
    for (std::size_t k = 0; k < g.nt(); ++k) {
        if (!keep(k, g.nt())) continue;
        for (std::size_t i = 0; i < g.nz(); ++i) {
            if (!keep(i, g.nz()) || !f.valid(i, k)) continue;
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g\n", g.z(i), g.t(k), f.at(i, k));
            os << buf;
        }
    }
}

}  // namespace hyperlq
