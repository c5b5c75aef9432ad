// Acceptance suite: one PASS/FAIL line per criterion with the measured value,
// its pinned tolerance and the wall-clock time.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "blasso/blasso.hpp"
#include "blasso_cli/run_config.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace blasso;

#ifndef BLASSO_CONFIG_DIR
#error "BLASSO_CONFIG_DIR must point at the configs directory"
#endif

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Options {
    std::string tool;
    std::string configs = BLASSO_CONFIG_DIR;
    std::string work = (fs::temp_directory_path() / "blasso_acceptance").string();
};

std::string fmt(double v) { return format_double(v); }

KernelContext random_context(oracle::Rng& rng, int d) {
    return KernelContext(DomainBox::uniform(d, -10.0, 10.0, 0.5, 2.0), rng.uniform(0.1, 0.5));
}

// A second location within semi-distance `rmax` of x, by rejection from a
// perturbation scaled to the local metric.
Location near_pair(oracle::Rng& rng, const Location& x, double rmax, const KernelContext& ctx) {
    const int d = x.dim();
    const double scale = rmax / std::sqrt(static_cast<double>(d));
    for (;;) {
        Location y = x;
        const double shrink = rng.uniform(0.0, 1.0);
        for (int k = 0; k < d; ++k) {
            const double w = std::sqrt(2.0 * x.u[k] * x.u[k] + ctx.tau * ctx.tau);
            y.t[k] += shrink * scale * w * rng.normal();
            y.u[k] = std::clamp(x.u[k] * std::exp(0.7 * shrink * scale * rng.normal()), ctx.box.u_min,
                                ctx.box.u_max);
        }
        if (semi_distance(x, y, ctx) <= rmax) return y;
    }
}

Outcome kernel_identities() {
    const long pairs = 10000;
    double diag = 0.0, semi = 0.0, fd = 0.0;
    for (int d = 1; d <= 3; ++d) {
        oracle::Rng rng(1000 + d);
        for (long i = 0; i < pairs; ++i) {
            const KernelContext ctx = random_context(rng, d);
            const Location x = rng.location(d, 3.0, 0.5, 2.0);
            Location y = rng.location(d, 3.0, 0.5, 2.0);
            for (int k = 0; k < d; ++k) y.t[k] = x.t[k] + rng.normal();
            diag = std::max(diag, std::abs(k_norm(x, x, ctx) - 1.0));
            const double k = k_norm(x, y, ctx);
            if (k > 1e-250) semi = std::max(semi, std::abs(semi_distance(x, y, ctx) - std::sqrt(-2.0 * std::log(k))));

            const Eigen::VectorXd xs = x.stacked(), ys = y.stacked();
            auto kx = [&](const Eigen::VectorXd& v) { return k_norm(Location::from_stacked(v), y, ctx); };
            auto ky = [&](const Eigen::VectorXd& v) { return k_norm(x, Location::from_stacked(v), ctx); };
            auto g2x = [&](const Eigen::VectorXd& v) { return grad2_k(Location::from_stacked(v), y, ctx); };
            auto g2y = [&](const Eigen::VectorXd& v) { return grad2_k(x, Location::from_stacked(v), ctx); };
            fd = std::max({fd, oracle::rel_error(grad1_k(x, y, ctx), oracle::fd_gradient(kx, xs)),
                           oracle::rel_error(grad2_k(x, y, ctx), oracle::fd_gradient(ky, ys)),
                           oracle::rel_error(grad1_grad2_k(x, y, ctx), oracle::fd_jacobian(g2x, xs).transpose()),
                           oracle::rel_error(hess2_k(x, y, ctx), oracle::fd_jacobian(g2y, ys))});
        }
    }
    return {diag < 1e-12 && semi < 1e-10 && fd < 1e-6,
            "diag=" + fmt(diag) + "/1e-12 semi=" + fmt(semi) + "/1e-10 fd=" + fmt(fd) + "/1e-6 pairs=" +
                std::to_string(3 * pairs)};
}

Outcome quadrature_cross_check() {
    oracle::Rng rng(2000);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const double tau = rng.uniform(0.2, 0.6);
        const KernelContext ctx(DomainBox::uniform(1, -10.0, 10.0, 0.6, 2.0), tau);
        const int n = 1 + inst % 5;
        SampleMatrix X(n, 1);
        std::vector<oracle::Component> fn;
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.uniform(-2.0, 2.0);
            fn.push_back({1.0 / n, X(i, 0), 0.0});
        }
        const Location x = rng.location(1, 2.0, 0.6, 2.0);
        const double W = weight_function(x, tau);
        const double w_ref = oracle::fourier_inner_1d(fn, {{1.0 / W, x.t[0], x.u[0]}}, tau);
        worst = std::max(worst, std::abs(data_witness(x, X, ctx) - w_ref) / std::abs(w_ref));

        // Beyond a few tau the Fourier integrand cancels to below the quadrature's
        // relative resolution.
        Eigen::VectorXd z(1);
        z << rng.uniform(-3.0 * tau, 3.0 * tau);
        const double l_ref = oracle::fourier_inner_1d({{1.0, z[0], 0.0}}, {{1.0, 0.0, 0.0}}, tau);
        worst = std::max(worst, std::abs(lambda_pair(z, ctx) - l_ref) / l_ref);

        DiscreteMeasure mu;
        std::vector<oracle::Component> g = fn;
        for (int j = 0; j < 3; ++j) {
            const Location a = rng.location(1, 2.0, 0.6, 2.0);
            const double w = rng.uniform(0.05, 0.5);
            mu.add(w, a);
            g.push_back({-w / weight_function(a, tau), a.t[0], a.u[0]});
        }
        const ObjectiveContext octx(X, 0.1, ctx);
        const double fid = objective(mu, octx) - 0.1 * tv_norm(mu);
        const double f_ref = 0.5 * oracle::fourier_inner_1d(g, g, tau);
        worst = std::max(worst, std::abs(fid - f_ref) / std::abs(f_ref));
    }
    return {worst < 1e-6, "max_rel=" + fmt(worst) + "/1e-6 instances=20"};
}

Outcome geometry() {
    double endpoint = 0.0, arc = 0.0, mono = 0.0, eps3 = 0.0, upper = 0.0;
    long eps3_pairs = 0;
    for (int d = 1; d <= 3; ++d) {
        oracle::Rng rng(3000 + d);
        const double r = kEps3Radius / std::sqrt(static_cast<double>(d));
        for (int i = 0; i < 334; ++i) {
            const KernelContext ctx = random_context(rng, d);
            const Location x = rng.location(d, 3.0, 0.5, 2.0), y = rng.location(d, 3.0, 0.5, 2.0);
            const GeodesicSpec path(x, y, ctx);
            endpoint = std::max({endpoint, (path.point(0.0).stacked() - x.stacked()).cwiseAbs().maxCoeff(),
                                 (path.point(1.0).stacked() - y.stacked()).cwiseAbs().maxCoeff()});
            if (i % 5 == 0) {
                // Trapezoid rule over |gamma'(y)| with central-difference velocities.
                const int steps = 1000;
                const double h = 1e-6;
                auto speed = [&](double s) {
                    const double lo = std::max(0.0, s - h), hi = std::min(1.0, s + h);
                    const Eigen::VectorXd v = (path.point(hi).stacked() - path.point(lo).stacked()) / (hi - lo);
                    return riemannian_norm(v, path.point(s), ctx);
                };
                double len = 0.0;
                for (int q = 0; q <= steps; ++q) len += (q == 0 || q == steps ? 0.5 : 1.0) * speed(double(q) / steps);
                len /= steps;
                arc = std::max(arc, std::abs(len - fisher_rao_distance(x, y, ctx)) / fisher_rao_distance(x, y, ctx));
            }
            const Location x0 = rng.location(d, 3.0, 0.5, 2.0);
            const Location x1 = near_pair(rng, x0, r, ctx);
            double prev = 0.0;
            for (int q = 0; q <= 100; ++q) {
                const double s = semi_distance(x0, geodesic_point(x0, x1, q / 100.0, ctx), ctx);
                mono = std::max(mono, prev - s);
                prev = std::max(prev, s);
            }
        }
        for (int i = 0; i < 3334; ++i) {
            const KernelContext ctx = random_context(rng, d);
            const Location x = rng.location(d, 3.0, 0.5, 2.0);
            const Location y = near_pair(rng, x, r, ctx);
            const double semi = semi_distance(x, y, ctx);
            if (semi == 0.0) continue;
            ++eps3_pairs;
            const double fr2 = std::pow(fisher_rao_distance(x, y, ctx), 2);
            eps3 = std::max(eps3, (semi * semi / kEps3Tilde - fr2) / (semi * semi));
            upper = std::max(upper, (fr2 - d * comparison_upper_F(semi)) / fr2);
        }
    }
    const bool pass = endpoint < 1e-10 && arc < 1e-4 && mono <= 1e-9 && eps3 <= 0.0 && upper <= 1e-12;
    return {pass, "endpoint=" + fmt(endpoint) + "/1e-10 arc=" + fmt(arc) + "/1e-4 monotone_drop=" + fmt(mono) +
                      "/1e-9 eps3_excess=" + fmt(eps3) + "/0 upperF_excess=" + fmt(upper) + "/1e-12 eps3_pairs=" +
                      std::to_string(eps3_pairs)};
}

Outcome operator_norms() {
    long violations = 0, pairs = 0;
    double worst_ratio = 0.0;
    for (int d = 1; d <= 3; ++d) {
        oracle::Rng rng(4000 + d);
        const DomainBox box = DomainBox::uniform(d, -10.0, 10.0, 0.5, 2.0);
        for (long i = 0; i < 10000; ++i) {
            const KernelContext ctx(box, rng.uniform(0.1, 0.5));
            const LpcConstants c = lpc_constants(d, 2, ctx.tau, box);
            const Location x = rng.location(d, 3.0, 0.5, 2.0);
            const Location y = i % 2 == 0 ? near_pair(rng, x, 1.5, ctx) : rng.location(d, 3.0, 0.5, 2.0);
            const OperatorNorms n = sampled_operator_norms(x, y, ctx);
            const double ratios[] = {n.n00 / c.B00, n.n10 / c.B10, n.n01 / c.B10,
                                     n.n11 / c.B11, n.n02 / c.B02, n.n12 / c.B12};
            for (double q : ratios) {
                worst_ratio = std::max(worst_ratio, q);
                if (q > 1.0) ++violations;
            }
            ++pairs;
        }
    }
    return {violations == 0, "violations=" + std::to_string(violations) + "/0 max_ratio=" + fmt(worst_ratio) +
                                 " pairs=" + std::to_string(pairs)};
}

Outcome certificates() {
    const KernelContext ctx(DomainBox::uniform(1, -40.0, 40.0, 1.0, 1.0), 1.0);
    bool pass = true;
    std::ostringstream detail;
    for (const std::vector<double>& ts : {std::vector<double>{-13.5, 13.5}, std::vector<double>{-27.0, 0.0, 27.0}}) {
        const int s = static_cast<int>(ts.size());
        DiscreteMeasure mu;
        std::vector<Location> anchors;
        for (double t : ts) {
            mu.add(1.0 / s, Location(t, 1.0));
            anchors.emplace_back(t, 1.0);
        }
        const LpcConstants consts = lpc_constants(1, s, 1.0, ctx.box);
        const CertificateSystem sys = build_upsilon(anchors, ctx);
        const CertificateSet certs = solve_certificates(sys);
        double residual = certs.global.residual, interp = 0.0, grad = 0.0, local_p2 = 0.0;
        for (int j = 0; j < s; ++j) {
            interp = std::max(interp, std::abs(eval_certificate(certs.global, sys, anchors[j]) - 1.0));
            grad = std::max(grad, eval_certificate_gradient(certs.global, sys, anchors[j]).cwiseAbs().maxCoeff());
            residual = std::max(residual, certs.locals[j].residual);
            local_p2 = std::max(local_p2, certs.locals[j].p_norm * certs.locals[j].p_norm);
        }
        const double global_p2 = certs.global.p_norm * certs.global.p_norm;
        const NondegeneracyReport rep = verify_nondegeneracy(certs, sys, mu, consts, GridSpec{});
        const bool ok = rep.separation.satisfied && residual < 1e-9 && interp < 1e-9 && grad < 1e-8 && rep.all_pass &&
                        global_p2 <= 2.0 * s && local_p2 <= 2.0;
        pass = pass && ok;
        detail << "s=" << s << "[residual=" << fmt(residual) << "/1e-9 interp=" << fmt(interp)
               << " grad=" << fmt(grad) << "/1e-8 grid=" << (rep.all_pass ? "pass" : "fail")
               << " points=" << rep.points << " p2=" << fmt(global_p2) << "/" << 2 * s
               << " local_p2=" << fmt(local_p2) << "/2] ";
    }
    return {pass, detail.str()};
}

cli::RunConfig load_rates(const Options& opt, const std::string& name) {
    return cli::resolve_run_config(Config::load(opt.configs + "/" + name), cli::Command::rates, {});
}

SweepConfig sweep_of(const cli::RunConfig& rc) {
    SweepConfig cfg;
    cfg.n_grid = rc.n_grid;
    cfg.replications = rc.replications;
    cfg.kappa_rule = rc.kappa_rule;
    cfg.kappa_fixed = rc.kappa_fixed;
    cfg.tau_rule = rc.tau_rule;
    cfg.tau_fixed = rc.scenario.ctx.tau;
    cfg.r_e = rc.r_e;
    cfg.solver = rc.solver;
    cfg.particles_per_atom = rc.particles_per_atom;
    cfg.seed = rc.seed;
    cfg.threads = rc.threads;
    return cfg;
}

long failed_rows(const ExperimentReport& rep) {
    return std::count_if(rep.rows.begin(), rep.rows.end(), [](const ReplicationRow& r) { return r.failed; });
}

Outcome estimation_rate(const Options& opt) {
    const cli::RunConfig rc = load_rates(opt, "rates_estimation.conf");
    const ExperimentReport rep = rate_sweep(rc.scenario, sweep_of(rc));
    const double slope = rep.mass_error_slope.at(0);
    return {std::abs(slope + 0.5) <= 0.15 && failed_rows(rep) == 0,
            "slope=" + fmt(slope) + " target=-0.5+-0.15 failed=" + std::to_string(failed_rows(rep))};
}

Outcome prediction_rate(const Options& opt) {
    const cli::RunConfig rc = load_rates(opt, "rates_prediction.conf");
    const ExperimentReport rep = rate_sweep(rc.scenario, sweep_of(rc));
    return {std::abs(rep.prediction_slope + 1.0) <= 0.2 && failed_rows(rep) == 0,
            "slope=" + fmt(rep.prediction_slope) + " target=-1+-0.2 failed=" + std::to_string(failed_rows(rep))};
}

Outcome soft_thresholding(const Options& opt) {
    const cli::RunConfig rc = load_rates(opt, "rates_estimation.conf");
    SweepConfig cfg = sweep_of(rc);
    cfg.n_grid = {10000};
    cfg.replications = 50;
    const ExperimentReport rep = rate_sweep(rc.scenario, cfg);
    const SweepAggregate& a = rep.aggregates.at(0);
    const double bound = 4.0 * rc.scenario.s() * a.kappa;
    return {std::abs(a.tv_error_mean) <= bound && a.ok == 50,
            "mean_tv_error=" + fmt(a.tv_error_mean) + " bound=" + fmt(bound) + " ok=" + std::to_string(a.ok) + "/50"};
}

Outcome sparsity(const Options& opt) {
    const cli::RunConfig rc = load_rates(opt, "rates_estimation.conf");
    SweepConfig cfg = sweep_of(rc);
    cfg.n_grid = {100000};
    cfg.replications = 20;
    const ExperimentReport rep = rate_sweep(rc.scenario, cfg);
    const double frac = rep.aggregates.at(0).exactly_one_fraction;
    return {frac >= 0.8, "exactly_one_fraction=" + fmt(frac) + " threshold=0.8 runs=20"};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[e.path().filename().string()] = s.str();
    }
    return files;
}

Outcome determinism(const Options& opt) {
    if (opt.tool.empty()) return {false, "no --tool given"};
    const fs::path root = fs::path(opt.work) / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string conf = opt.configs + "/rates_tutorial.conf";
    auto run = [&](const std::string& tag, int threads) {
        const std::string cmd = "\"" + opt.tool + "\" rates --config \"" + conf + "\" --out \"" +
                                (root / tag).string() + "\" --threads " + std::to_string(threads) + " > \"" +
                                (root / (tag + ".log")).string() + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        return status;
    };
    const int sa = run("a", 1), sb = run("b", 1), sc = run("c", 4);
    if (!fs::exists(root / "a") || !fs::exists(root / "b") || !fs::exists(root / "c"))
        return {false, "a run produced no output directory"};
    const auto a = read_dir(root / "a"), b = read_dir(root / "b"), c = read_dir(root / "c");
    const bool same = !a.empty() && a == b && a == c;
    const bool statuses = sa == sb && sa == sc;
    return {same && statuses, "files=" + std::to_string(a.size()) + " repeat=" + (a == b ? "identical" : "differs") +
                                  " threads_1_vs_4=" + (a == c ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    std::vector<int> selected;
    CLI::App app{"Acceptance criteria"};
    app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 10));
    app.add_option("--tool", opt.tool, "path to the blasso executable");
    app.add_option("--configs", opt.configs, "directory holding the shipped configs");
    app.add_option("--work", opt.work, "scratch directory");
    CLI11_PARSE(app, argc, argv);
    if (selected.empty())
        for (int i = 1; i <= 10; ++i) selected.push_back(i);

    const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
        {1, {"kernel_identities", kernel_identities}},
        {2, {"quadrature_cross_check", quadrature_cross_check}},
        {3, {"geometry", geometry}},
        {4, {"operator_norm_bounds", operator_norms}},
        {5, {"certificates", certificates}},
        {6, {"estimation_rate", [&] { return estimation_rate(opt); }}},
        {7, {"prediction_rate", [&] { return prediction_rate(opt); }}},
        {8, {"soft_thresholding", [&] { return soft_thresholding(opt); }}},
        {9, {"sparsity", [&] { return sparsity(opt); }}},
        {10, {"determinism", [&] { return determinism(opt); }}},
    };
    const std::map<int, double> budget_seconds = {{1, 10}, {2, 30}, {3, 30}, {4, 600}, {5, 120},
                                                  {6, 1200}, {7, 1200}, {8, 1200}, {9, 1200}, {10, 600}};

    bool all = true;
    for (int id : selected) {
        const auto& [name, fn] = criteria.at(id);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double budget = budget_seconds.at(id);
        const bool pass = o.pass && secs <= budget;
        all = all && pass;
        std::ostringstream t;
        t.precision(3);
        t << std::fixed << secs;
        std::cout << (pass ? "PASS" : "FAIL") << " c" << id << " " << name << " " << o.detail << " time=" << t.str()
                  << "s/" << budget << "s" << std::endl;
    }
    return all ? 0 : 1;
}
