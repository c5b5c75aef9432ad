#include "blasso_cli/invariants.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "blasso/blasso.hpp"

namespace blasso::cli {
namespace {

struct Draw {
    std::mt19937_64 rng;
    explicit Draw(std::uint64_t seed) : rng(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }

    KernelContext context(int d) {
        const double u_min = 0.5;
        return KernelContext(DomainBox::uniform(d, -10.0, 10.0, u_min, 2.0), uniform(0.1, u_min));
    }
    Location location(int d) {
        Location x{Eigen::VectorXd(d), Eigen::VectorXd(d)};
        for (int k = 0; k < d; ++k) {
            x.t[k] = uniform(-3.0, 3.0);
            x.u[k] = uniform(0.5, 2.0);
        }
        return x;
    }
    Location near(const Location& x, double spread) {
        Location y = x;
        for (int k = 0; k < x.dim(); ++k) {
            y.t[k] += spread * normal();
            y.u[k] = uniform(0.5, 2.0);
        }
        return y;
    }
};

using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Central differences of a vector function; column c is the derivative along
// coordinate c.
Eigen::MatrixXd jacobian_fd(const VecFn& f, const Eigen::VectorXd& at) {
    const Eigen::VectorXd f0 = f(at);
    Eigen::MatrixXd J(f0.size(), at.size());
    for (Eigen::Index c = 0; c < at.size(); ++c) {
        const double h = 1e-5 * std::max(1.0, std::abs(at[c]));
        Eigen::VectorXd p = at, m = at;
        p[c] += h;
        m[c] -= h;
        J.col(c) = (f(p) - f(m)) / (2.0 * h);
    }
    return J;
}

double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / (a.cwiseAbs().maxCoeff() + 1e-8);
}

struct Tally {
    InvariantResult r;
    Tally(std::string name, double tol) {
        r.suite = std::move(name);
        r.tolerance = tol;
    }
    void add(double err) {
        ++r.checked;
        if (!(err <= r.tolerance)) ++r.failures;
        if (!(err <= r.max_error)) r.max_error = std::isnan(err) ? err : std::max(r.max_error, err);
    }
};

}  // namespace

std::vector<InvariantResult> run_kernel_invariants(long samples, std::uint64_t seed, Fault fault) {
    if (samples < 1) throw PreconditionError("kernel-check needs at least one sample per suite");
    Tally diag("k_norm_diagonal", 1e-12), semi("semi_distance_log", 1e-10), sym("k_norm_symmetry", 1e-14),
        g1("grad1_fd", 1e-6), g2("grad2_fd", 1e-6), g12("grad1_grad2_fd", 1e-6), h2("hess2_fd", 1e-6),
        metric("metric_from_kernel", 1e-10), chris("christoffel_from_metric", 1e-6),
        rhess("riemannian_hessian_geodesic", 1e-5), geo_end("geodesic_endpoints", 1e-10),
        geo_len("geodesic_length", 1e-4);

    for (int d = 1; d <= 3; ++d) {
        Draw draw(derive_seed(seed, static_cast<std::uint64_t>(d), 0));
        for (long i = 0; i < samples; ++i) {
            const KernelContext ctx = draw.context(d);
            const Location x = draw.location(d);
            const Location y = draw.near(x, 1.0);

            diag.add(std::abs(k_norm(x, x, ctx) - 1.0));
            const double k = k_norm(x, y, ctx);
            if (k > 1e-250) semi.add(std::abs(semi_distance(x, y, ctx) - std::sqrt(-2.0 * std::log(k))));
            sym.add(std::abs(k - k_norm(y, x, ctx)) / std::max(k, 1e-300));

            const Eigen::VectorXd xs = x.stacked(), ys = y.stacked();
            auto k_of_x = [&](const Eigen::VectorXd& v) {
                return Eigen::VectorXd::Constant(1, k_norm(Location::from_stacked(v), y, ctx));
            };
            auto k_of_y = [&](const Eigen::VectorXd& v) {
                return Eigen::VectorXd::Constant(1, k_norm(x, Location::from_stacked(v), ctx));
            };
            g1.add(rel_error(grad1_k(x, y, ctx).transpose(), jacobian_fd(k_of_x, xs)));
            g2.add(rel_error(grad2_k(x, y, ctx).transpose(), jacobian_fd(k_of_y, ys)));
            auto g2_of_x = [&](const Eigen::VectorXd& v) { return grad2_k(Location::from_stacked(v), y, ctx); };
            auto g2_of_y = [&](const Eigen::VectorXd& v) { return grad2_k(x, Location::from_stacked(v), ctx); };
            g12.add(rel_error(grad1_grad2_k(x, y, ctx), jacobian_fd(g2_of_x, xs).transpose()));
            h2.add(rel_error(hess2_k(x, y, ctx), jacobian_fd(g2_of_y, ys)));

            metric.add(rel_error(grad1_grad2_k(x, x, ctx), metric_at(x, ctx).matrix()));

            const Christoffel G = christoffel(x, ctx);
            auto metric_of = [&](const Eigen::VectorXd& v) { return metric_at(Location::from_stacked(v), ctx).diag; };
            const Eigen::MatrixXd dg = jacobian_fd(metric_of, xs);  // dg(m, i) = d_i g_mm
            const Eigen::VectorXd g = metric_at(x, ctx).diag;
            const int n = 2 * d;
            double worst = 0.0;
            for (int m = 0; m < n; ++m) {
                Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(n, n);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        double v = 0.0;
                        if (m == b) v += dg(m, a);
                        if (m == a) v += dg(m, b);
                        if (a == b) v -= dg(a, m);
                        oracle(a, b) = 0.5 * v / g[m];
                    }
                Eigen::MatrixXd lib = G.upper(m);
                if (fault == Fault::christoffel_sign) lib = -lib;
                worst = std::max(worst, (lib - oracle).cwiseAbs().maxCoeff() / (oracle.cwiseAbs().maxCoeff() + 1e-3));
            }
            chris.add(worst);

            // Second derivative of K(x, .) along a geodesic equals the Riemannian
            // Hessian applied to the velocity.
            const Location z = draw.near(y, 0.5);
            const GeodesicSpec path(y, z, ctx);
            if (path.length() > 0.1) {
                const double s0 = 0.5, hs = 2e-3;
                auto f = [&](double s) { return k_norm(x, path.point(s), ctx); };
                auto second = [&](double h) { return (f(s0 + h) - 2.0 * f(s0) + f(s0 - h)) / (h * h); };
                const double fdd = (4.0 * second(0.5 * hs) - second(hs)) / 3.0;
                const double hv = 1e-5;
                const Eigen::VectorXd vel =
                    (path.point(s0 + hv).stacked() - path.point(s0 - hv).stacked()) / (2.0 * hv);
                const Eigen::MatrixXd H = riemannian_hessian2_k(x, path.point(s0), ctx);
                rhess.add(std::abs(fdd - vel.dot(H * vel)) / (H.cwiseAbs().maxCoeff() * vel.squaredNorm() + 1e-12));
            }
            if (path.length() > 1e-3) {
                const double end0 = (path.point(0.0).stacked() - ys).cwiseAbs().maxCoeff();
                const double end1 = (path.point(1.0).stacked() - z.stacked()).cwiseAbs().maxCoeff();
                geo_end.add(std::max(end0, end1));

                if (i % 10 == 0) {
                    const int steps = 2000;
                    double len = 0.0;
                    Eigen::VectorXd prev = path.point(0.0).stacked();
                    for (int q = 1; q <= steps; ++q) {
                        const Eigen::VectorXd cur = path.point(static_cast<double>(q) / steps).stacked();
                        const Location mid = Location::from_stacked(0.5 * (prev + cur));
                        len += riemannian_norm(cur - prev, mid, ctx);
                        prev = cur;
                    }
                    const double fr = fisher_rao_distance(y, z, ctx);
                    geo_len.add(std::abs(len - fr) / fr);
                }
            }
        }
    }
    return {diag.r, semi.r, sym.r, g1.r, g2.r, g12.r, h2.r, metric.r, chris.r, rhess.r, geo_end.r, geo_len.r};
}

}  // namespace blasso::cli
