#include "blasso/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "blasso/error.hpp"
#include "blasso/kernel.hpp"

namespace blasso {
namespace {

double half_plane_height(double u, double half_tau2) { return std::sqrt(u * u + half_tau2); }

// Hyperbolic distance in the Poincare half-plane between (t0, h0) and (t1, h1),
// written with (h1 - h0)^2 = (u1^2 - u0^2)^2 / (h0 + h1)^2 to stay accurate when
// the heights are close.
double poincare_distance(double t0, double u0, double t1, double u1, double half_tau2) {
    const double h0 = half_plane_height(u0, half_tau2);
    const double h1 = half_plane_height(u1, half_tau2);
    const double dh = (u1 - u0) * (u1 + u0) / (h0 + h1);
    const double dt = t1 - t0;
    const double z = (dt * dt + dh * dh) / (2.0 * h0 * h1);
    return std::log1p(z + std::sqrt(z * (z + 2.0)));
}

}  // namespace

double MetricAt::norm(const Eigen::VectorXd& v) const {
    if (v.size() != diag.size()) throw DimensionError("tangent vector has the wrong length");
    return std::sqrt((v.array().square() * diag.array()).sum());
}

MetricAt metric_at(const Location& x, const KernelContext& ctx) {
    validate_location(x, ctx.d);
    const double tau2 = ctx.tau * ctx.tau;
    MetricAt g;
    g.diag.resize(2 * ctx.d);
    for (int k = 0; k < ctx.d; ++k) {
        const double u = x.u[k];
        const double A = 2.0 * u * u + tau2;
        g.diag[k] = 1.0 / A;
        g.diag[ctx.d + k] = 2.0 * u * u / (A * A);
    }
    return g;
}

double riemannian_norm(const Eigen::VectorXd& v, const Location& x, const KernelContext& ctx) {
    return metric_at(x, ctx).norm(v);
}

const Eigen::MatrixXd& Christoffel::upper(int m) const {
    const int d = static_cast<int>(t.size());
    if (m < 0 || m >= 2 * d) throw DimensionError("Christoffel index out of range");
    return m < d ? t[m] : u[m - d];
}

Christoffel christoffel(const Location& x, const KernelContext& ctx) {
    validate_location(x, ctx.d);
    const int d = ctx.d;
    const double tau2 = ctx.tau * ctx.tau;
    Christoffel G;
    G.t.assign(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(2 * d, 2 * d));
    G.u.assign(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(2 * d, 2 * d));
    for (int k = 0; k < d; ++k) {
        const double u = x.u[k];
        const double A = 2.0 * u * u + tau2;
        G.t[k](k, d + k) = G.t[k](d + k, k) = -2.0 * u / A;
        G.u[k](k, k) = 1.0 / u;
        G.u[k](d + k, d + k) = (tau2 - 2.0 * u * u) / (u * A);
    }
    return G;
}

double fisher_rao_distance(const Location& x, const Location& y, const KernelContext& ctx) {
    validate_location(x, ctx.d);
    validate_location(y, ctx.d);
    const double half_tau2 = 0.5 * ctx.tau * ctx.tau;
    double s = 0.0;
    for (int k = 0; k < ctx.d; ++k) {
        const double dk = poincare_distance(x.t[k], x.u[k], y.t[k], y.u[k], half_tau2) / std::numbers::sqrt2;
        s += dk * dk;
    }
    return std::sqrt(s);
}

GeodesicSpec::GeodesicSpec(const Location& from, const Location& to, const KernelContext& ctx)
    : from_(from), to_(to), half_tau2_(0.5 * ctx.tau * ctx.tau) {
    validate_location(from, ctx.d);
    validate_location(to, ctx.d);
    const int d = ctx.d;
    coords_.resize(static_cast<std::size_t>(d));
    shares_.assign(static_cast<std::size_t>(d), 0.0);
    double total_sq = 0.0;
    for (int k = 0; k < d; ++k) {
        Coordinate& c = coords_[k];
        const double t0 = from.t[k], t1 = to.t[k];
        const double u0 = from.u[k], u1 = to.u[k];
        const double h0 = half_plane_height(u0, half_tau2_);
        const double h1 = half_plane_height(u1, half_tau2_);
        const double dt = t1 - t0;
        const double dh2 = (u1 - u0) * (u1 + u0);  // h1^2 - h0^2
        c.t0 = t0;
        c.h0 = h0;
        c.length = poincare_distance(t0, u0, t1, u1, half_tau2_) / std::numbers::sqrt2;
        if (dt == 0.0 && u0 == u1) {
            c.branch = GeodesicBranch::constant;
        } else if (std::abs(dt) < 1e-9 * std::max(h0, h1)) {
            c.branch = GeodesicBranch::vertical;
            c.log_ratio = 0.5 * std::log1p(dh2 / (h0 * h0));
        } else {
            c.branch = GeodesicBranch::semicircle;
            // sinh(sigma) = (t - c3) / h along the circle centred at (c3, 0).
            const double s0 = -(dt * dt + dh2) / (2.0 * dt * h0);
            const double s1 = (dt * dt - dh2) / (2.0 * dt * h1);
            c.sigma0 = std::asinh(s0);
            c.dsigma = std::asinh(s1) - c.sigma0;
        }
        total_sq += c.length * c.length;
    }
    length_ = std::sqrt(total_sq);
    if (total_sq > 0.0)
        for (int k = 0; k < d; ++k) shares_[k] = coords_[k].length * coords_[k].length / total_sq;
}

Location GeodesicSpec::point(double y) const {
    Location out = from_;
    for (std::size_t k = 0; k < coords_.size(); ++k) {
        const Coordinate& c = coords_[k];
        double t = c.t0, h = c.h0;
        switch (c.branch) {
            case GeodesicBranch::constant:
                break;
            case GeodesicBranch::vertical:
                t = c.t0 + y * (to_.t[k] - from_.t[k]);
                h = c.h0 * std::exp(y * c.log_ratio);
                break;
            case GeodesicBranch::semicircle: {
                const double sig = c.sigma0 + y * c.dsigma;
                const double ch = std::cosh(sig);
                t = c.t0 + c.h0 * std::sinh(y * c.dsigma) / ch;
                h = c.h0 * std::cosh(c.sigma0) / ch;
                break;
            }
        }
        out.t[k] = t;
        out.u[k] = c.branch == GeodesicBranch::constant ? from_.u[k] : std::sqrt(std::max(h * h - half_tau2_, 0.0));
    }
    return out;
}

Location geodesic_point(const Location& x, const Location& y, double s, const KernelContext& ctx) {
    return GeodesicSpec(x, y, ctx).point(s);
}

int region_of(const Location& x, const DiscreteMeasure& target, double r, const KernelContext& ctx) {
    int best = kFarRegion;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < target.size(); ++j) {
        const double dj = semi_distance(x, target.atoms[j].x, ctx);
        if (dj <= r && dj < best_d) {
            best = static_cast<int>(j);
            best_d = dj;
        }
    }
    return best;
}

double comparison_upper_F(double y) {
    if (!(y >= 0.0)) throw DomainError("comparison_upper_F needs y >= 0");
    if (y >= std::numbers::sqrt2) return std::numeric_limits<double>::infinity();
    const double e = std::exp(y * y);
    const double arg = 0.5 * (e + std::sqrt(std::expm1(2.0 * y * y)) + 1.0) / (1.0 - y / std::numbers::sqrt2);
    const double a = std::acosh(arg);
    return 0.5 * a * a;
}

}  // namespace blasso
