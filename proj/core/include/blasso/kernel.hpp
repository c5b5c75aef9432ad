#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "blasso/measure.hpp"

namespace blasso {

// Samples are stored one row per observation, one column per coordinate.
using SampleMatrix = Eigen::MatrixXd;

double k_norm(const Location& x, const Location& y, const KernelContext& ctx);

// sqrt(-2 ln k_norm), evaluated from the mean and log-variance terms directly.
double semi_distance(const Location& x, const Location& y, const KernelContext& ctx);

Eigen::VectorXd grad1_k(const Location& x, const Location& y, const KernelContext& ctx);
Eigen::VectorXd grad2_k(const Location& x, const Location& y, const KernelContext& ctx);

// (a, b) entry: d/dx_a d/dy_b K(x, y).
Eigen::MatrixXd grad1_grad2_k(const Location& x, const Location& y, const KernelContext& ctx);

// (a, b) entry: d/dy_a d/dy_b K(x, y).
Eigen::MatrixXd hess2_k(const Location& x, const Location& y, const KernelContext& ctx);

// Riemannian Hessian of K(x, .) at y, with Christoffel symbols taken at y.
Eigen::MatrixXd riemannian_hessian2_k(const Location& x, const Location& y, const KernelContext& ctx);

// All derivatives of K up to the requested total order, computed in one pass.
//   order 0: value
//   order 1: + grad1, grad2
//   order 2: + grad1_grad2, hess2
//   order 3: + grad1_hess2[a](b, c) = d/dx_a d/dy_b d/dy_c K(x, y)
struct KernelDerivatives {
    double value = 0.0;
    Eigen::VectorXd grad1;
    Eigen::VectorXd grad2;
    Eigen::MatrixXd grad1_grad2;
    Eigen::MatrixXd hess2;
    std::vector<Eigen::MatrixXd> grad1_hess2;
};

KernelDerivatives kernel_derivatives(const Location& x, const Location& y, const KernelContext& ctx, int order);

// Riemannian Hessian in the second slot and its derivative along each
// coordinate of the first slot, assembled from `kernel_derivatives(order 3)`.
struct RiemannianHessianJet {
    Eigen::MatrixXd hessian;
    std::vector<Eigen::MatrixXd> grad1_hessian;
};

RiemannianHessianJet riemannian_hessian2_jet(const Location& x, const Location& y, const KernelContext& ctx);

// <L f_n, Psi delta_x> for the empirical measure of `samples`.
double data_witness(const Location& x, const SampleMatrix& samples, const KernelContext& ctx);

struct WitnessJet {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

WitnessJet data_witness_jet(const Location& x, const SampleMatrix& samples, const KernelContext& ctx);

// S_m(t, var) = sum_i (x_i - t)^m exp(-(x_i - t)^2 / (2 var)) for m = 0, 1, 2
// over fixed scalar points. Points are binned at width sqrt(var_min) / 2 and each
// bin contributes through a truncated Hermite expansion around its center; bins
// farther than 10 sqrt(2 var) are skipped. The truncation error is below 1e-16
// relative to the largest bin contribution. Requires var >= var_min.
class GaussianSum1d {
public:
    GaussianSum1d(const double* x, Eigen::Index n, double var_min);

    std::array<double, 3> sums(double t, double var) const;
    double var_min() const { return var_min_; }

    static constexpr int kTerms = 16;

private:
    double var_min_ = 0.0;
    std::vector<double> centers_;
    std::vector<double> coef_;  // kTerms per bin: sum_i (x_i - c)^k / k!
};

// Repeated witness evaluation against fixed samples: GaussianSum1d for d == 1
// and u >= u_min, direct summation otherwise.
class WitnessEvaluator {
public:
    WitnessEvaluator(const SampleMatrix& samples, const KernelContext& ctx);

    WitnessJet jet(const Location& x) const;
    double value(const Location& x) const { return jet(x).value; }
    bool expanded() const { return sums_.has_value(); }

private:
    SampleMatrix samples_;
    KernelContext ctx_;
    std::optional<GaussianSum1d> sums_;
};

// <L delta_X, L delta_Y> as a function of z = X - Y.
double lambda_pair(const Eigen::VectorXd& z, const KernelContext& ctx);

}  // namespace blasso
