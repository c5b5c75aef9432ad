#include "blasso/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "blasso/error.hpp"
#include "blasso/geometry.hpp"

namespace blasso {
namespace {

// Derivatives of the per-coordinate log-kernel
//   l(t, p, t', q) = 1/4 ln A + 1/4 ln B - 1/2 ln S - (t - t')^2 / (2 S)
// with A = 2p^2 + tau^2, B = 2q^2 + tau^2, S = p^2 + q^2 + tau^2.
// Local variable order: 0 = t, 1 = p (= u), 2 = t', 3 = q (= u').
struct LogJet1 {
    double l = 0.0;
    double g[4] = {};
    double h[4][4] = {};
    double t3[4][4][4] = {};
};

// Squared semi-distance contribution of one coordinate; equals -2 l.
double semi_distance_sq_1d(double t, double p, double tp, double q, double tau2) {
    const double dl = t - tp;
    const double A = 2.0 * p * p + tau2;
    const double B = 2.0 * q * q + tau2;
    const double S = p * p + q * q + tau2;
    const double sa = std::sqrt(A);
    const double sb = std::sqrt(B);
    const double diff = 2.0 * (p - q) * (p + q) / (sa + sb);
    const double v = dl * dl / S + std::log1p(diff * diff / (2.0 * sa * sb));
    return v > 0.0 ? v : 0.0;
}

void log_jet_1d(double t, double p, double tp, double q, double tau2, int order, LogJet1& J) {
    J.l = -0.5 * semi_distance_sq_1d(t, p, tp, q, tau2);
    if (order < 1) return;

    const double dl = t - tp;
    const double A = 2.0 * p * p + tau2;
    const double B = 2.0 * q * q + tau2;
    const double S = p * p + q * q + tau2;
    const double iS = 1.0 / S;
    const double iS2 = iS * iS;
    const double iS3 = iS2 * iS;

    const double dv[4] = {1.0, 0.0, -1.0, 0.0};
    const double sv[4] = {0.0, 2.0 * p, 0.0, 2.0 * q};
    auto s2 = [](int i, int j) { return (i == j && (i == 1 || i == 3)) ? 2.0 : 0.0; };

    const double h_d = -dl * iS;
    const double h_s = -0.5 * iS + 0.5 * dl * dl * iS2;
    for (int i = 0; i < 4; ++i) J.g[i] = h_d * dv[i] + h_s * sv[i];
    J.g[1] += p / A;
    J.g[3] += q / B;
    if (order < 2) return;

    const double h_dd = -iS;
    const double h_ds = dl * iS2;
    const double h_ss = 0.5 * iS2 - dl * dl * iS3;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            J.h[i][j] = h_dd * dv[i] * dv[j] + h_ds * (dv[i] * sv[j] + dv[j] * sv[i]) + h_ss * sv[i] * sv[j] +
                        h_s * s2(i, j);
    J.h[1][1] += (tau2 - 2.0 * p * p) / (A * A);
    J.h[3][3] += (tau2 - 2.0 * q * q) / (B * B);
    if (order < 3) return;

    const double h_dds = iS2;
    const double h_dss = -2.0 * dl * iS3;
    const double h_sss = -iS3 + 3.0 * dl * dl * iS2 * iS2;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                J.t3[i][j][k] = h_dds * (dv[i] * dv[j] * sv[k] + dv[i] * dv[k] * sv[j] + dv[j] * dv[k] * sv[i]) +
                                h_dss * (dv[i] * sv[j] * sv[k] + dv[j] * sv[i] * sv[k] + dv[k] * sv[i] * sv[j]) +
                                h_sss * sv[i] * sv[j] * sv[k] +
                                h_ds * (dv[i] * s2(j, k) + dv[j] * s2(i, k) + dv[k] * s2(i, j)) +
                                h_ss * (sv[i] * s2(j, k) + sv[j] * s2(i, k) + sv[k] * s2(i, j));
    J.t3[1][1][1] += 4.0 * p * (2.0 * p * p - 3.0 * tau2) / (A * A * A);
    J.t3[3][3][3] += 4.0 * q * (2.0 * q * q - 3.0 * tau2) / (B * B * B);
}

void check_pair(const Location& x, const Location& y, const KernelContext& ctx) {
    if (x.dim() != ctx.d || y.dim() != ctx.d || x.u.size() != ctx.d || y.u.size() != ctx.d)
        throw DimensionError("kernel arguments do not match the context dimension");
}

// ln K expanded over the full variable vector (x, y) of length 4d. Variable
// index m * d + k addresses local slot m of coordinate k, which matches the
// (t, u) layout of each argument.
class LogKernelExpansion {
public:
    LogKernelExpansion(const Location& x, const Location& y, const KernelContext& ctx, int order)
        : d_(ctx.d), jets_(static_cast<std::size_t>(ctx.d)) {
        check_pair(x, y, ctx);
        const double tau2 = ctx.tau * ctx.tau;
        for (int k = 0; k < d_; ++k) {
            log_jet_1d(x.t[k], x.u[k], y.t[k], y.u[k], tau2, order, jets_[k]);
            log_value_ += jets_[k].l;
        }
    }

    double log_value() const { return log_value_; }
    double g(int a) const { return jets_[a % d_].g[a / d_]; }
    double h(int a, int b) const {
        if (a % d_ != b % d_) return 0.0;
        return jets_[a % d_].h[a / d_][b / d_];
    }
    double t3(int a, int b, int c) const {
        if (a % d_ != b % d_ || a % d_ != c % d_) return 0.0;
        return jets_[a % d_].t3[a / d_][b / d_][c / d_];
    }

private:
    int d_;
    std::vector<LogJet1> jets_;
    double log_value_ = 0.0;
};

}  // namespace

double k_norm(const Location& x, const Location& y, const KernelContext& ctx) {
    check_pair(x, y, ctx);
    return std::exp(-0.5 * [&] {
        const double tau2 = ctx.tau * ctx.tau;
        double s = 0.0;
        for (int k = 0; k < ctx.d; ++k) s += semi_distance_sq_1d(x.t[k], x.u[k], y.t[k], y.u[k], tau2);
        return s;
    }());
}

double semi_distance(const Location& x, const Location& y, const KernelContext& ctx) {
    check_pair(x, y, ctx);
    const double tau2 = ctx.tau * ctx.tau;
    double s = 0.0;
    for (int k = 0; k < ctx.d; ++k) s += semi_distance_sq_1d(x.t[k], x.u[k], y.t[k], y.u[k], tau2);
    return std::sqrt(s);
}

KernelDerivatives kernel_derivatives(const Location& x, const Location& y, const KernelContext& ctx, int order) {
    const LogKernelExpansion L(x, y, ctx, order);
    const int n = 2 * ctx.d;
    KernelDerivatives out;
    const double K = std::exp(L.log_value());
    out.value = K;
    if (order < 1) return out;

    out.grad1.resize(n);
    out.grad2.resize(n);
    for (int a = 0; a < n; ++a) {
        out.grad1[a] = K * L.g(a);
        out.grad2[a] = K * L.g(n + a);
    }
    if (order < 2) return out;

    out.grad1_grad2.resize(n, n);
    out.hess2.resize(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            out.grad1_grad2(a, b) = K * (L.h(a, n + b) + L.g(a) * L.g(n + b));
            out.hess2(a, b) = K * (L.h(n + a, n + b) + L.g(n + a) * L.g(n + b));
        }
    if (order < 3) return out;

    out.grad1_hess2.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                const int B = n + b, C = n + c;
                out.grad1_hess2[a](b, c) =
                    K * (L.t3(a, B, C) + L.h(a, B) * L.g(C) + L.h(a, C) * L.g(B) + L.h(B, C) * L.g(a) +
                         L.g(a) * L.g(B) * L.g(C));
            }
    return out;
}

Eigen::VectorXd grad1_k(const Location& x, const Location& y, const KernelContext& ctx) {
    return kernel_derivatives(x, y, ctx, 1).grad1;
}

Eigen::VectorXd grad2_k(const Location& x, const Location& y, const KernelContext& ctx) {
    return kernel_derivatives(x, y, ctx, 1).grad2;
}

Eigen::MatrixXd grad1_grad2_k(const Location& x, const Location& y, const KernelContext& ctx) {
    return kernel_derivatives(x, y, ctx, 2).grad1_grad2;
}

Eigen::MatrixXd hess2_k(const Location& x, const Location& y, const KernelContext& ctx) {
    return kernel_derivatives(x, y, ctx, 2).hess2;
}

Eigen::MatrixXd riemannian_hessian2_k(const Location& x, const Location& y, const KernelContext& ctx) {
    const KernelDerivatives D = kernel_derivatives(x, y, ctx, 2);
    const Christoffel G = christoffel(y, ctx);
    Eigen::MatrixXd H = D.hess2;
    for (int m = 0; m < 2 * ctx.d; ++m) H -= D.grad2[m] * G.upper(m);
    return H;
}

RiemannianHessianJet riemannian_hessian2_jet(const Location& x, const Location& y, const KernelContext& ctx) {
    const KernelDerivatives D = kernel_derivatives(x, y, ctx, 3);
    const Christoffel G = christoffel(y, ctx);
    const int n = 2 * ctx.d;
    RiemannianHessianJet out;
    out.hessian = D.hess2;
    for (int m = 0; m < n; ++m) out.hessian -= D.grad2[m] * G.upper(m);
    out.grad1_hessian.resize(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        Eigen::MatrixXd M = D.grad1_hess2[a];
        for (int m = 0; m < n; ++m) M -= D.grad1_grad2(a, m) * G.upper(m);
        out.grad1_hessian[a] = std::move(M);
    }
    return out;
}

namespace {

WitnessJet assemble_witness(const Location& x, double s0, const Eigen::VectorXd& s1, const Eigen::VectorXd& s2,
                            Eigen::Index n, const KernelContext& ctx) {
    const int d = ctx.d;
    const double tau2 = ctx.tau * ctx.tau;
    double norm_const = 1.0;
    for (int k = 0; k < d; ++k) norm_const /= std::sqrt(2.0 * std::numbers::pi * (x.u[k] * x.u[k] + tau2));
    const double scale = norm_const / (static_cast<double>(n) * weight_function(x, ctx.tau));
    WitnessJet out;
    out.value = scale * s0;
    out.gradient.resize(2 * d);
    for (int k = 0; k < d; ++k) {
        const double u = x.u[k];
        const double A = 2.0 * u * u + tau2;
        const double iv = 1.0 / (u * u + tau2);
        out.gradient[k] = scale * s1[k] * iv;
        out.gradient[d + k] = out.value * (u / A - u * iv) + scale * u * s2[k] * iv * iv;
    }
    return out;
}

}  // namespace

WitnessJet data_witness_jet(const Location& x, const SampleMatrix& samples, const KernelContext& ctx) {
    const int d = ctx.d;
    if (x.dim() != d) throw DimensionError("witness location does not match the context dimension");
    if (samples.rows() < 1) throw PreconditionError("data_witness needs at least one sample");
    if (samples.cols() != d) throw DimensionError("sample matrix has the wrong number of columns");

    const double tau2 = ctx.tau * ctx.tau;
    const Eigen::Index n = samples.rows();
    Eigen::VectorXd inv_var(d), t(x.t);
    for (int k = 0; k < d; ++k) inv_var[k] = 1.0 / (x.u[k] * x.u[k] + tau2);

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d), s2 = Eigen::VectorXd::Zero(d);
    if (d == 1) {
        const double* X = samples.data();
        const double t0 = t[0], half_iv = 0.5 * inv_var[0];
        double a0 = 0.0, a1 = 0.0, a2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z = X[i] - t0;
            const double g = std::exp(-half_iv * z * z);
            a0 += g;
            a1 += g * z;
            a2 += g * z * z;
        }
        s0 = a0;
        s1[0] = a1;
        s2[0] = a2;
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            double e = 0.0;
            for (int k = 0; k < d; ++k) {
                const double z = samples(i, k) - t[k];
                e -= 0.5 * z * z * inv_var[k];
            }
            const double g = std::exp(e);
            s0 += g;
            for (int k = 0; k < d; ++k) {
                const double z = samples(i, k) - t[k];
                s1[k] += g * z;
                s2[k] += g * z * z;
            }
        }
    }

    return assemble_witness(x, s0, s1, s2, n, ctx);
}

GaussianSum1d::GaussianSum1d(const double* x, Eigen::Index n, double var_min) : var_min_(var_min) {
    if (n < 1) throw PreconditionError("GaussianSum1d needs at least one point");
    if (!(var_min > 0.0) || !std::isfinite(var_min)) throw DomainError("var_min must be positive and finite");
    const double w = 0.5 * std::sqrt(var_min);
    std::vector<double> X(x, x + n);
    std::sort(X.begin(), X.end());
    const double origin = X.front();
    std::size_t i = 0;
    while (i < X.size()) {
        const double bin = std::floor((X[i] - origin) / w);
        const double c = origin + (bin + 0.5) * w;
        std::array<double, kTerms> m{};
        for (; i < X.size() && std::floor((X[i] - origin) / w) == bin; ++i) {
            const double delta = X[i] - c;
            double p = 1.0;
            for (int k = 0; k < kTerms; ++k) {
                m[k] += p;
                p *= delta;
            }
        }
        double fact = 1.0;
        for (int k = 0; k < kTerms; ++k) {
            if (k > 0) fact *= k;
            coef_.push_back(m[k] / fact);
        }
        centers_.push_back(c);
    }
}

std::array<double, 3> GaussianSum1d::sums(double t, double var) const {
    if (!(var >= var_min_)) throw DomainError("GaussianSum1d variance below var_min");
    const double root2s = std::sqrt(2.0 * var);
    const double q = -1.0 / root2s;
    const double reach = 10.0 * root2s + std::sqrt(var_min_);
    auto it = std::lower_bound(centers_.begin(), centers_.end(), t - reach);
    const auto end = std::upper_bound(it, centers_.end(), t + reach);

    // Over a bin, sum_i g^(j)(z_c + delta_i) with g(z) = exp(-z^2 / (2 var)),
    // g^(k)(z) = q^k h_k(A), h_k = exp(-A^2) H_k(A), A = z / sqrt(2 var).
    constexpr int H = kTerms + 2;
    std::array<double, H> qk{};
    qk[0] = 1.0;
    for (int k = 1; k < H; ++k) qk[k] = qk[k - 1] * q;
    double T0 = 0.0, T1 = 0.0, T2 = 0.0;
    std::array<double, H> h{};
    for (; it != end; ++it) {
        const std::size_t b = static_cast<std::size_t>(it - centers_.begin());
        const double A = (*it - t) / root2s;
        h[0] = std::exp(-A * A);
        h[1] = 2.0 * A * h[0];
        for (int k = 1; k + 1 < H; ++k) h[k + 1] = 2.0 * A * h[k] - 2.0 * k * h[k - 1];
        const double* c = &coef_[b * kTerms];
        double b0 = 0.0, b1 = 0.0, b2 = 0.0;
        for (int k = 0; k < kTerms; ++k) {
            b0 += c[k] * qk[k] * h[k];
            b1 += c[k] * qk[k + 1] * h[k + 1];
            b2 += c[k] * qk[k + 2] * h[k + 2];
        }
        T0 += b0;
        T1 += b1;
        T2 += b2;
    }
    // z g = -var g', z^2 g = var^2 g'' + var g.
    return {std::max(T0, 0.0), -var * T1, std::max(var * var * T2 + var * T0, 0.0)};
}

WitnessEvaluator::WitnessEvaluator(const SampleMatrix& samples, const KernelContext& ctx)
    : samples_(samples), ctx_(ctx) {
    if (samples_.rows() < 1) throw PreconditionError("data_witness needs at least one sample");
    if (samples_.cols() != ctx_.d) throw DimensionError("sample matrix has the wrong number of columns");
    if (ctx_.d == 1)
        sums_.emplace(samples_.data(), samples_.rows(), ctx_.box.u_min * ctx_.box.u_min + ctx_.tau * ctx_.tau);
}

WitnessJet WitnessEvaluator::jet(const Location& x) const {
    if (!sums_ || x.dim() != 1 || !(x.u[0] >= ctx_.box.u_min)) return data_witness_jet(x, samples_, ctx_);
    const double var = x.u[0] * x.u[0] + ctx_.tau * ctx_.tau;
    const std::array<double, 3> S = sums_->sums(x.t[0], std::max(var, sums_->var_min()));
    Eigen::VectorXd s1(1), s2(1);
    s1[0] = S[1];
    s2[0] = S[2];
    return assemble_witness(x, S[0], s1, s2, samples_.rows(), ctx_);
}

double data_witness(const Location& x, const SampleMatrix& samples, const KernelContext& ctx) {
    return data_witness_jet(x, samples, ctx).value;
}

double lambda_pair(const Eigen::VectorXd& z, const KernelContext& ctx) {
    if (z.size() != ctx.d) throw DimensionError("lambda_pair argument does not match the context dimension");
    const double tau2 = ctx.tau * ctx.tau;
    return std::pow(2.0 * std::numbers::pi * tau2, -0.5 * ctx.d) * std::exp(-0.5 * z.squaredNorm() / tau2);
}

}  // namespace blasso
