#pragma once

#include <Eigen/Core>
#include <vector>

#include "blasso/measure.hpp"

namespace blasso {

// Diagonal Fisher-Rao metric at a location: (1/(2u_k^2+tau^2))_k then
// (2u_k^2/(2u_k^2+tau^2)^2)_k.
struct MetricAt {
    Eigen::VectorXd diag;

    Eigen::MatrixXd matrix() const { return diag.asDiagonal(); }
    double norm(const Eigen::VectorXd& v) const;
};

MetricAt metric_at(const Location& x, const KernelContext& ctx);
double riemannian_norm(const Eigen::VectorXd& v, const Location& x, const KernelContext& ctx);

// Christoffel symbols Gamma^m_{ij} indexed by the upper index m. `t[k]` holds
// Gamma^{t_k}, `u[k]` holds Gamma^{u_k}; each is a symmetric 2d x 2d matrix.
struct Christoffel {
    std::vector<Eigen::MatrixXd> t;
    std::vector<Eigen::MatrixXd> u;

    // m in [0, 2d) following the (t, u) layout.
    const Eigen::MatrixXd& upper(int m) const;
};

Christoffel christoffel(const Location& x, const KernelContext& ctx);

double fisher_rao_distance(const Location& x, const Location& y, const KernelContext& ctx);

enum class GeodesicBranch { constant, vertical, semicircle };

// Fisher-Rao geodesic between two locations. Each coordinate is mapped to the
// Poincare half-plane via (t, sqrt(u^2 + tau^2/2)) and follows a vertical line
// or a semicircle there; every coordinate advances proportionally to y.
class GeodesicSpec {
public:
    GeodesicSpec(const Location& from, const Location& to, const KernelContext& ctx);

    Location point(double y) const;

    const Location& from() const { return from_; }
    const Location& to() const { return to_; }
    GeodesicBranch branch(int k) const { return coords_[k].branch; }
    // Arc-length share g_k of coordinate k; shares sum to 1 unless length() == 0.
    double share(int k) const { return shares_[k]; }
    double length() const { return length_; }

private:
    struct Coordinate {
        GeodesicBranch branch = GeodesicBranch::constant;
        double t0 = 0.0, h0 = 1.0;
        double log_ratio = 0.0;    // vertical: ln(h1 / h0)
        double sigma0 = 0.0;       // semicircle: start angle in hyperbolic arc length
        double dsigma = 0.0;       // semicircle: signed arc length
        double length = 0.0;       // Fisher-Rao length of this coordinate
    };

    Location from_, to_;
    double half_tau2_ = 0.5;
    std::vector<Coordinate> coords_;
    std::vector<double> shares_;
    double length_ = 0.0;
};

Location geodesic_point(const Location& x, const Location& y, double s, const KernelContext& ctx);

inline constexpr int kFarRegion = -1;

// Index of the nearest atom of `target` within semi-distance r (closed ball,
// smallest index on ties), or kFarRegion.
int region_of(const Location& x, const DiscreteMeasure& target, double r, const KernelContext& ctx);

// Lower comparison constant: fisher_rao^2 >= semi^2 / kEps3Tilde when
// semi <= kEps3Radius / sqrt(d).
inline constexpr double kEps3Tilde = 2.84;
inline constexpr double kEps3Radius = 0.3025;

// F(y) = 1/2 arcosh( (e^{y^2} + sqrt(e^{2y^2} - 1) + 1) / (2 (1 - y/sqrt 2)) )^2,
// defined for 0 <= y < sqrt 2. Upper comparison: fisher_rao^2 <= d F(semi).
double comparison_upper_F(double y);

}  // namespace blasso
