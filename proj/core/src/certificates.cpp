#include "blasso/certificates.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "blasso/error.hpp"
#include "blasso/geometry.hpp"
#include "blasso/kernel.hpp"

namespace blasso {
namespace {

constexpr double kRadius = 0.3025;
constexpr double kEps2Bar = 0.13139;
constexpr double kEps0BarTimes2d = 0.0894;
constexpr double kEps0TimesD = 0.03911;
constexpr double kEps2 = 0.06158;
constexpr double kEps2TildeOffset = 0.004106;
constexpr double kCp = 2.0;
constexpr double kConditionLimit = 1e12;

double spectral_norm(const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double radical_inverse(long index, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Values and first derivatives of K(x_j, .) at one point, shared across all
// certificates evaluated there.
struct AnchorTerms {
    std::vector<KernelDerivatives> per_anchor;
};

AnchorTerms anchor_terms(const CertificateSystem& sys, const Location& x, int order) {
    AnchorTerms a;
    a.per_anchor.reserve(sys.anchors.size());
    for (const auto& xj : sys.anchors) a.per_anchor.push_back(kernel_derivatives(xj, x, sys.ctx, order));
    return a;
}

double eval_from_terms(const CertificateSolution& sol, const AnchorTerms& T) {
    double v = 0.0;
    for (std::size_t j = 0; j < T.per_anchor.size(); ++j)
        v += sol.alpha[j] * T.per_anchor[j].value + sol.beta[j].dot(T.per_anchor[j].grad1);
    return v;
}

Eigen::VectorXd gradient_from_terms(const CertificateSolution& sol, const AnchorTerms& T) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(T.per_anchor.front().grad2.size());
    for (std::size_t j = 0; j < T.per_anchor.size(); ++j)
        g += sol.alpha[j] * T.per_anchor[j].grad2 + T.per_anchor[j].grad1_grad2.transpose() * sol.beta[j];
    return g;
}

CertificateSolution unpack(const Eigen::VectorXd& z, int s, int d) {
    CertificateSolution sol;
    sol.alpha = z.head(s);
    sol.beta.resize(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) sol.beta[j] = z.segment(s + 2 * d * j, 2 * d);
    return sol;
}

class ClauseAccumulator {
public:
    ClauseAccumulator(std::string name, double slack) : slack_(slack) {
        r_.name = std::move(name);
        r_.worst_margin = std::numeric_limits<double>::infinity();
    }
    void add(double margin, const Location& x) {
        ++r_.checked;
        if (margin < -slack_) ++r_.violations;
        if (margin < r_.worst_margin) {
            r_.worst_margin = margin;
            r_.worst_point = x;
        }
    }
    ClauseResult finish() {
        r_.pass = r_.violations == 0;
        if (r_.checked == 0) r_.worst_margin = 0.0;
        return r_;
    }

private:
    double slack_;
    ClauseResult r_;
};

}  // namespace

double separation_delta(int d, int s, SeparationFormula formula) {
    if (d < 1) throw PreconditionError("dimension must be >= 1");
    if (s < 2) return 0.0;
    const bool one_d = formula == SeparationFormula::one_dimensional ||
                       (formula == SeparationFormula::automatic && d == 1);
    if (one_d) {
        if (d != 1) throw PreconditionError("the one-dimensional separation formula needs d = 1");
        return 2.0 * std::sqrt(13.88 + std::log(s - 1.0));
    }
    return 2.0 * std::sqrt(11.9 + 3.0 * std::log(d + 6.62) + std::log(s - 1.0));
}

double separation_threshold(int d, double delta, double r, double tau, double u_min, double u_max) {
    const double lead = std::sqrt(u_max * u_max + 0.25 * r * r * (2.0 * u_max * u_max + tau * tau)) / u_min * (delta + r);
    const double ratio = 2.0 * (u_max / u_min) * delta;
    return std::max(lead, ratio) + std::sqrt(d * std::log(u_max * u_max / (u_min * u_min)));
}

LpcConstants lpc_constants(int d, int s, double tau, const DomainBox& box, SeparationFormula formula) {
    if (d < 1 || s < 1) throw PreconditionError("lpc_constants needs d >= 1 and s >= 1");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    box.validate();
    LpcConstants c;
    c.d = d;
    c.s = s;
    c.r = kRadius / std::sqrt(static_cast<double>(d));
    c.eps2_bar = kEps2Bar;
    c.eps0_bar = kEps0BarTimes2d / (2.0 * d);
    c.delta = separation_delta(d, s, formula);
    c.B00 = 1.0;
    c.B10 = std::sqrt(2.0 * d);
    c.B11 = 2.0 * d;
    c.B02 = std::sqrt(4.0 * d * d + 10.0 * d);
    c.B12 = std::sqrt(2.0 * d) * c.B02;
    c.eps0 = kEps0TimesD / d;
    c.eps2 = kEps2;
    c.eps0_tilde = kEps0TimesD / d;
    c.eps2_tilde = c.B02 / 2.0 + kEps2TildeOffset;
    c.cp = kCp;
    c.eps3_tilde = kEps3Tilde;
    c.delta_tau = s < 2 ? 0.0 : separation_threshold(d, c.delta, c.r, tau, box.u_min, box.u_max);
    return c;
}

SeparationReport separation_check(const DiscreteMeasure& mu0, const KernelContext& ctx, const LpcConstants& consts) {
    SeparationReport rep;
    rep.delta_tau = consts.delta_tau;
    if (mu0.size() < 2) {
        rep.min_semidistance = std::numeric_limits<double>::infinity();
        rep.satisfied = true;
        return rep;
    }
    rep.min_semidistance = min_pairwise_semidistance(mu0, ctx);
    rep.satisfied = rep.min_semidistance >= rep.delta_tau;
    return rep;
}

OperatorNorms sampled_operator_norms(const Location& x, const Location& y, const KernelContext& ctx) {
    const KernelDerivatives D = kernel_derivatives(x, y, ctx, 2);
    const RiemannianHessianJet R = riemannian_hessian2_jet(x, y, ctx);
    const Eigen::VectorXd wx = metric_at(x, ctx).diag.cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd wy = metric_at(y, ctx).diag.cwiseSqrt().cwiseInverse();
    OperatorNorms n;
    n.n00 = std::abs(D.value);
    n.n10 = wx.cwiseProduct(D.grad1).norm();
    n.n01 = wy.cwiseProduct(D.grad2).norm();
    n.n11 = spectral_norm(wx.asDiagonal() * D.grad1_grad2 * wy.asDiagonal());
    n.n02 = spectral_norm(wy.asDiagonal() * R.hessian * wy.asDiagonal());
    double m = 0.0;
    for (int a = 0; a < 2 * ctx.d; ++a)
        m = std::max(m, wx[a] * spectral_norm(wy.asDiagonal() * R.grad1_hessian[a] * wy.asDiagonal()));
    n.n12 = std::sqrt(2.0 * ctx.d) * m;
    return n;
}

CertificateSystem build_upsilon(const std::vector<Location>& anchors, const KernelContext& ctx) {
    const int s = static_cast<int>(anchors.size());
    if (s < 1) throw PreconditionError("build_upsilon needs at least one anchor");
    for (const auto& a : anchors) validate_location(a, ctx.d);
    for (int i = 0; i < s; ++i)
        for (int j = i + 1; j < s; ++j)
            if (anchors[i] == anchors[j])
                throw SingularSystemError("duplicate anchors make the certificate system singular",
                                          std::numeric_limits<double>::infinity());

    const int n = 2 * ctx.d;
    CertificateSystem sys;
    sys.anchors = anchors;
    sys.ctx = ctx;
    sys.upsilon.resize(s * (1 + n), s * (1 + n));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            // Row block i holds the constraints at anchor i; column block j the
            // coefficients of anchor j, so entries are derivatives of K(x_j, x_i).
            const KernelDerivatives D = kernel_derivatives(anchors[j], anchors[i], ctx, 2);
            sys.upsilon(i, j) = D.value;
            sys.upsilon.block(i, s + n * j, 1, n) = D.grad1.transpose();
            sys.upsilon.block(s + n * i, j, n, 1) = D.grad2;
            sys.upsilon.block(s + n * i, s + n * j, n, n) = D.grad1_grad2.transpose();
        }
    // Diagonal blocks are exact: K(x, x) = 1, grad K(x, x) = 0, grad1 grad2 K(x, x) = metric.
    for (int i = 0; i < s; ++i) {
        sys.upsilon(i, i) = 1.0;
        sys.upsilon.block(i, s + n * i, 1, n).setZero();
        sys.upsilon.block(s + n * i, i, n, 1).setZero();
        sys.upsilon.block(s + n * i, s + n * i, n, n) = metric_at(anchors[i], ctx).matrix();
    }
    sys.upsilon = 0.5 * (sys.upsilon + sys.upsilon.transpose()).eval();
    return sys;
}

CertificateSet solve_certificates(const CertificateSystem& sys) {
    const int s = sys.s();
    const int d = sys.ctx.d;
    const int N = static_cast<int>(sys.upsilon.rows());

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N, s + 1);
    rhs.col(0).head(s).setOnes();
    for (int j = 0; j < s; ++j) rhs(j, j + 1) = 1.0;

    Eigen::MatrixXd Z;
    LinearSolver used = LinearSolver::cholesky;
    double cond = std::numeric_limits<double>::infinity();
    Eigen::LLT<Eigen::MatrixXd> llt(sys.upsilon);
    if (llt.info() == Eigen::Success) {
        const double rc = llt.rcond();
        cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    }
    if (llt.info() == Eigen::Success && cond <= kConditionLimit) {
        Z = llt.solve(rhs);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.upsilon);
        const double rc = lu.rcond();
        const double lu_cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        cond = std::isfinite(cond) ? std::max(cond, lu_cond) : lu_cond;
        if (!lu.isInvertible()) throw SingularSystemError("certificate system is singular", cond);
        Z = lu.solve(rhs);
        used = LinearSolver::pivoted_lu;
    }
    const Eigen::MatrixXd R = sys.upsilon * Z - rhs;

    CertificateSet out;
    for (int c = 0; c <= s; ++c) {
        CertificateSolution sol = unpack(Z.col(c), s, d);
        sol.kind = c == 0 ? CertificateKind::global : CertificateKind::local;
        sol.index = c - 1;
        sol.residual = R.col(c).cwiseAbs().maxCoeff();
        sol.condition_estimate = cond;
        sol.solver = used;
        const double q = Z.col(c).dot(sys.upsilon * Z.col(c));
        sol.p_norm = std::sqrt(std::max(q, 0.0));
        if (!std::isfinite(sol.residual) || sol.residual > 1e-9)
            throw SingularSystemError("certificate system is ill-conditioned; solve residual " +
                                          std::to_string(sol.residual),
                                      cond);
        if (c == 0)
            out.global = std::move(sol);
        else
            out.locals.push_back(std::move(sol));
    }
    return out;
}

double eval_certificate(const CertificateSolution& sol, const CertificateSystem& sys, const Location& x) {
    return eval_from_terms(sol, anchor_terms(sys, x, 1));
}

Eigen::VectorXd eval_certificate_gradient(const CertificateSolution& sol, const CertificateSystem& sys,
                                          const Location& x) {
    return gradient_from_terms(sol, anchor_terms(sys, x, 2));
}

NondegeneracyReport verify_nondegeneracy(const CertificateSet& certs, const CertificateSystem& sys,
                                         const DiscreteMeasure& mu0, const LpcConstants& consts,
                                         const GridSpec& grid) {
    const KernelContext& ctx = sys.ctx;
    const DomainBox& box = ctx.box;
    const int d = ctx.d;
    const int s = sys.s();
    if (static_cast<int>(mu0.size()) != s) throw PreconditionError("target measure and anchors disagree in size");
    if (static_cast<int>(certs.locals.size()) != s) throw PreconditionError("expected one local certificate per anchor");

    NondegeneracyReport rep;
    rep.separation = separation_check(mu0, ctx, consts);

    const double slack = grid.slack;
    ClauseAccumulator g_interp("global.interpolation", slack), g_far("global.far", slack),
        g_near("global.near", slack), g_norm("global.p_norm", slack);
    std::vector<ClauseAccumulator> l_interp, l_far, l_own, l_other, l_norm;
    for (int j = 0; j < s; ++j) {
        const std::string p = "local[" + std::to_string(j) + "].";
        l_interp.emplace_back(p + "interpolation", slack);
        l_far.emplace_back(p + "far", slack);
        l_own.emplace_back(p + "near_own", slack);
        l_other.emplace_back(p + "near_other", slack);
        l_norm.emplace_back(p + "p_norm", slack);
    }

    // Interpolation and norm clauses at the anchors.
    for (int i = 0; i < s; ++i) {
        const Location& xi = sys.anchors[i];
        const AnchorTerms T = anchor_terms(sys, xi, 2);
        const double gi = eval_from_terms(certs.global, T);
        const double gg = gradient_from_terms(certs.global, T).cwiseAbs().maxCoeff();
        g_interp.add(-std::max(std::abs(gi - 1.0), gg), xi);
        for (int j = 0; j < s; ++j) {
            const double target = i == j ? 1.0 : 0.0;
            const double v = eval_from_terms(certs.locals[j], T);
            const double gv = gradient_from_terms(certs.locals[j], T).cwiseAbs().maxCoeff();
            l_interp[j].add(-std::max(std::abs(v - target), gv), xi);
        }
    }
    g_norm.add(consts.cp * s - certs.global.p_norm * certs.global.p_norm, sys.anchors.front());
    for (int j = 0; j < s; ++j)
        l_norm[j].add(consts.cp - certs.locals[j].p_norm * certs.locals[j].p_norm, sys.anchors[j]);

    auto check_point = [&](const Location& x) {
        ++rep.points;
        const int region = region_of(x, mu0, consts.r, ctx);
        const AnchorTerms T = anchor_terms(sys, x, 1);
        const double eta = eval_from_terms(certs.global, T);
        if (region == kFarRegion) {
            g_far.add((1.0 - consts.eps0) - std::abs(eta), x);
            for (int j = 0; j < s; ++j)
                l_far[j].add((1.0 - consts.eps0_tilde) - std::abs(eval_from_terms(certs.locals[j], T)), x);
            return;
        }
        const double fr = fisher_rao_distance(x, sys.anchors[region], ctx);
        const double fr2 = fr * fr;
        g_near.add(1.0 - consts.eps2 * fr2 - eta, x);
        for (int j = 0; j < s; ++j) {
            const double ej = eval_from_terms(certs.locals[j], T);
            if (j == region)
                l_own[j].add(consts.eps2_tilde * fr2 - std::abs(1.0 - ej), x);
            else
                l_other[j].add(consts.eps2_tilde * fr2 - std::abs(ej), x);
        }
    };

    // Tensor grid over a box [t_lo, t_hi] x [u_lo, u_hi]^d; a collapsed u range
    // contributes a single level.
    auto tensor_grid = [&](const Eigen::VectorXd& t_lo, const Eigen::VectorXd& t_hi, double u_lo, double u_hi,
                           int t_res, int u_res) {
        const int tr = std::max(t_res, 1);
        const int ur = u_hi > u_lo ? std::max(u_res, 1) : 1;
        double total = 1.0;
        for (int k = 0; k < d; ++k) total *= static_cast<double>(tr) * ur;
        if (total > 5e7) throw PreconditionError("verification grid is too large; lower the resolution");
        const long count = static_cast<long>(total);
        Location x{Eigen::VectorXd(d), Eigen::VectorXd(d)};
        for (long idx = 0; idx < count; ++idx) {
            long rem = idx;
            for (int k = 0; k < d; ++k) {
                const long it = rem % tr;
                rem /= tr;
                x.t[k] = tr == 1 ? 0.5 * (t_lo[k] + t_hi[k]) : t_lo[k] + (t_hi[k] - t_lo[k]) * it / (tr - 1.0);
            }
            for (int k = 0; k < d; ++k) {
                const long iu = rem % ur;
                rem /= ur;
                x.u[k] = ur == 1 ? u_lo : u_lo + (u_hi - u_lo) * iu / (ur - 1.0);
            }
            check_point(x);
        }
    };

    tensor_grid(box.t_lo, box.t_hi, box.u_min, box.u_max, grid.t_res, grid.u_res);

    const double tau2 = ctx.tau * ctx.tau;
    for (int j = 0; j < s; ++j) {
        const Location& xj = sys.anchors[j];
        Eigen::VectorXd lo(d), hi(d);
        for (int k = 0; k < d; ++k) {
            const double half = consts.r * std::sqrt(xj.u[k] * xj.u[k] + box.u_max * box.u_max + tau2);
            lo[k] = std::max(box.t_lo[k], xj.t[k] - half);
            hi[k] = std::min(box.t_hi[k], xj.t[k] + half);
        }
        tensor_grid(lo, hi, box.u_min, box.u_max, grid.region_t_res, grid.region_u_res);
    }

    {
        Location x{Eigen::VectorXd(d), Eigen::VectorXd(d)};
        const bool u_free = box.u_max > box.u_min;
        for (long i = 1; i <= grid.lowdisc_points; ++i) {
            int p = 0;
            for (int k = 0; k < d; ++k)
                x.t[k] = box.t_lo[k] + (box.t_hi[k] - box.t_lo[k]) * radical_inverse(i, kPrimes[p++ % 16]);
            for (int k = 0; k < d; ++k)
                x.u[k] = u_free ? box.u_min + (box.u_max - box.u_min) * radical_inverse(i, kPrimes[p++ % 16])
                                : box.u_min;
            check_point(x);
        }
    }

    // Geodesic rays from each anchor to points of its near-region boundary.
    std::mt19937_64 dir_rng(0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    for (int j = 0; j < s; ++j) {
        const Location& xj = sys.anchors[j];
        const MetricAt g = metric_at(xj, ctx);
        for (int m = 0; m < grid.rays; ++m) {
            Eigen::VectorXd v(2 * d);
            if (d == 1) {
                const double th = 2.0 * std::numbers::pi * m / grid.rays;
                v << std::cos(th), std::sin(th);
            } else {
                for (int a = 0; a < 2 * d; ++a) v[a] = normal(dir_rng);
            }
            v = v.cwiseQuotient(g.diag.cwiseSqrt());
            v /= g.norm(v);
            // Scale so the endpoint sits at semi-distance r, keeping u positive.
            double lam_hi = 4.0 * consts.r;
            for (int k = 0; k < d; ++k)
                if (v[d + k] < 0.0) lam_hi = std::min(lam_hi, -0.5 * xj.u[k] / v[d + k]);
            auto endpoint = [&](double lam) { return Location::from_stacked(xj.stacked() + lam * v); };
            double lam_lo = 0.0;
            if (semi_distance(xj, endpoint(lam_hi), ctx) > consts.r) {
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lam_lo + lam_hi);
                    (semi_distance(xj, endpoint(mid), ctx) > consts.r ? lam_hi : lam_lo) = mid;
                }
            }
            const GeodesicSpec geo(xj, endpoint(lam_lo > 0.0 ? lam_lo : lam_hi), ctx);
            for (int step = 1; step <= grid.ray_steps; ++step) {
                const Location x = geo.point(static_cast<double>(step) / grid.ray_steps);
                if (box.contains(x, 1e-12)) check_point(box.clamp(x));
            }
        }
    }

    rep.clauses.push_back(g_interp.finish());
    rep.clauses.push_back(g_far.finish());
    rep.clauses.push_back(g_near.finish());
    rep.clauses.push_back(g_norm.finish());
    for (int j = 0; j < s; ++j) {
        rep.clauses.push_back(l_interp[j].finish());
        rep.clauses.push_back(l_far[j].finish());
        rep.clauses.push_back(l_own[j].finish());
        rep.clauses.push_back(l_other[j].finish());
        rep.clauses.push_back(l_norm[j].finish());
    }
    rep.norms_pass = true;
    for (const auto& c : rep.clauses)
        if (c.name.ends_with("p_norm") && !c.pass) rep.norms_pass = false;
    rep.all_pass = rep.separation.satisfied;
    for (const auto& c : rep.clauses) rep.all_pass = rep.all_pass && c.pass;
    return rep;
}

}  // namespace blasso
