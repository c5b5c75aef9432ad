#include "blasso/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "blasso/certificates.hpp"
#include "blasso/error.hpp"
#include "blasso/geometry.hpp"

namespace blasso {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RegionMasses masses_against(const DiscreteMeasure& estimate, const DiscreteMeasure& target,
                            const std::vector<double>& target_weights, double r_e, double r,
                            const KernelContext& ctx) {
    if (!(r_e > 0.0) || r_e > r) throw PreconditionError("effective radius must satisfy 0 < r_e <= r");
    std::vector<double> mass(target.size(), 0.0);
    RegionMasses out;
    for (const auto& a : estimate.atoms) {
        const int j = region_of(a.x, target, r_e, ctx);
        if (j == kFarRegion)
            out.far_mass += a.weight;
        else
            mass[j] += a.weight;
    }
    out.errors.resize(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) out.errors[j] = std::abs(target_weights[j] - mass[j]);
    return out;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

void mean_se(const std::vector<double>& v, double& mean, double& se) {
    mean = mean_of(v);
    se = 0.0;
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

void GroundTruthMixture::validate() const {
    ctx.validate();
    if (mu0.empty()) throw PreconditionError("ground truth needs at least one atom");
    validate_measure(mu0, ctx.d);
    if (std::abs(tv_norm(mu0) - 1.0) > 1e-12) throw PreconditionError("ground-truth weights must sum to 1");
    for (const auto& a : mu0.atoms)
        if (!ctx.box.contains(a.x)) throw PreconditionError("ground-truth atoms must lie in the domain box");
}

SampleMatrix sample(const GroundTruthMixture& mix, long n, std::uint64_t seed) {
    if (n < 1) throw PreconditionError("sample size must be >= 1");
    const int d = mix.ctx.d;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> cum;
    double c = 0.0;
    for (const auto& a : mix.mu0.atoms) cum.push_back(c += a.weight);
    SampleMatrix X(n, d);
    for (long i = 0; i < n; ++i) {
        const double v = unif(rng) * c;
        std::size_t j = 0;
        while (j + 1 < cum.size() && !(v < cum[j])) ++j;
        const Location& x = mix.mu0.atoms[j].x;
        for (int k = 0; k < d; ++k) X(i, k) = x.t[k] + x.u[k] * normal(rng);
    }
    return X;
}

RegionMasses region_mass_errors(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0_w, double r_e, double r,
                                const KernelContext& ctx) {
    std::vector<double> w;
    for (const auto& a : mu0_w.atoms) w.push_back(a.weight);
    return masses_against(mu_hat_w, mu0_w, w, r_e, r, ctx);
}

RegionMasses renormalized_mass_errors(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0, double r_e,
                                      double r, const KernelContext& ctx) {
    const DiscreteMeasure est = reparametrize(mu_hat_w, ctx.tau, Direction::from_omega);
    std::vector<double> a;
    for (const auto& atom : mu0.atoms) a.push_back(atom.weight);
    return masses_against(est, mu0, a, r_e, r, ctx);
}

double gaussian_l2_inner(const Location& x, const Location& y) {
    if (x.dim() != y.dim()) throw DimensionError("gaussian_l2_inner arguments differ in dimension");
    double v = 1.0;
    for (int k = 0; k < x.dim(); ++k) {
        const double var = x.u[k] * x.u[k] + y.u[k] * y.u[k];
        const double dt = x.t[k] - y.t[k];
        v *= std::exp(-0.5 * dt * dt / var) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    return v;
}

double prediction_error(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0, const KernelContext& ctx) {
    // Signed measure mu_hat_w / W - mu0 with coincident locations combined first
    // so that identical mixtures cancel before any Gaussian products are formed.
    std::vector<Atom> nu;
    auto push = [&nu](double w, const Location& x) {
        for (auto& a : nu)
            if (a.x == x) {
                a.weight += w;
                return;
            }
        nu.push_back({w, x});
    };
    for (const auto& a : mu_hat_w.atoms) push(a.weight / weight_function(a.x, ctx.tau), a.x);
    for (const auto& a : mu0.atoms) push(-a.weight, a.x);
    double s = 0.0;
    for (std::size_t p = 0; p < nu.size(); ++p) {
        s += nu[p].weight * nu[p].weight * gaussian_l2_inner(nu[p].x, nu[p].x);
        for (std::size_t q = p + 1; q < nu.size(); ++q)
            s += 2.0 * nu[p].weight * nu[q].weight * gaussian_l2_inner(nu[p].x, nu[q].x);
    }
    return std::max(s, 0.0);
}

SparsityReport sparsity_check(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0, double r,
                              const KernelContext& ctx) {
    SparsityReport rep;
    rep.atoms_per_region.assign(mu0.size(), 0);
    for (const auto& a : mu_hat_w.atoms) {
        const int j = region_of(a.x, mu0, r, ctx);
        if (j == kFarRegion)
            ++rep.far_atoms;
        else
            ++rep.atoms_per_region[j];
    }
    rep.exactly_one_each = rep.far_atoms == 0;
    for (int c : rep.atoms_per_region) rep.exactly_one_each = rep.exactly_one_each && c == 1;
    return rep;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(master ^ splitmix64(a)) ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mx = mean_of(lx), my = mean_of(ly);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

ReplicationRow run_replication(const GroundTruthMixture& mix, const SweepConfig& cfg, long n, int replication,
                               std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    ReplicationRow row;
    row.n = n;
    row.replication = replication;
    row.seed = seed;
    try {
        const int d = mix.ctx.d;
        const int s = mix.s();
        const DomainBox& box = mix.ctx.box;
        const double tau = cfg.tau_rule == TauRule::prediction
                               ? recommended_parameters(n, s, d, mix.ctx.tau, box).tau_prediction
                               : cfg.tau_fixed;
        const KernelContext ctx(box, tau, mix.ctx.relaxed || tau > box.u_min);
        const RecommendedParameters rp = recommended_parameters(n, s, d, tau, box);
        double kappa = 0.0;
        switch (cfg.kappa_rule) {
            case KappaRule::agnostic: kappa = rp.kappa_agnostic; break;
            case KappaRule::s_dependent: kappa = rp.kappa_s_dependent; break;
            case KappaRule::small_reg: kappa = rp.kappa_small_reg; break;
            case KappaRule::fixed: kappa = cfg.kappa_fixed; break;
        }
        row.tau = tau;
        row.kappa = kappa;

        const ObjectiveContext octx(sample(mix, n, seed), kappa, ctx);
        const LpcConstants lpc = lpc_constants(d, s, tau, box);
        SolverConfig scfg = cfg.solver;
        scfg.seed = derive_seed(seed, 0x51, 0);
        scfg.max_particles = std::max(1, cfg.particles_per_atom * s);
        const SolveResult res = cpgd_solve(initialize_particles(octx, scfg), octx, scfg);
        row.iterations = res.iterations;
        row.converged = res.converged;
        row.atoms = static_cast<int>(res.measure.size());

        const DiscreteMeasure mu0_w = reparametrize(mix.mu0, tau, Direction::to_omega);
        row.tv_error = tv_norm(res.measure) - tv_norm(mu0_w);
        const std::vector<double> radii = cfg.r_e.empty() ? std::vector<double>{lpc.r} : cfg.r_e;
        for (std::size_t q = 0; q < radii.size(); ++q) {
            const RegionMasses m = region_mass_errors(res.measure, mu0_w, radii[q], lpc.r, ctx);
            const RegionMasses mr = renormalized_mass_errors(res.measure, mix.mu0, radii[q], lpc.r, ctx);
            row.mean_mass_error.push_back(mean_of(m.errors));
            row.mean_renorm_error.push_back(mean_of(mr.errors));
            if (q == 0) {
                row.mass_errors = m.errors;
                row.far_mass = m.far_mass;
            }
        }
        row.exactly_one = sparsity_check(res.measure, mix.mu0, lpc.r, ctx).exactly_one_each;
        row.prediction_error = prediction_error(res.measure, mix.mu0, ctx);
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
    }
    row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

ExperimentReport aggregate(const std::vector<ReplicationRow>& rows, const std::vector<double>& r_e,
                           const std::vector<long>& n_grid) {
    ExperimentReport rep;
    rep.r_e = r_e;
    rep.rows = rows;
    const std::size_t nr = r_e.size();
    std::vector<double> ns, pred_means;
    std::vector<std::vector<double>> mass_means(nr);
    for (const long n : n_grid) {
        SweepAggregate agg;
        agg.n = n;
        std::vector<std::vector<double>> mass(nr);
        std::vector<double> far, tv, pred;
        int one = 0;
        for (const auto& row : rows) {
            if (row.n != n || row.failed) continue;
            ++agg.ok;
            agg.tau = row.tau;
            agg.kappa = row.kappa;
            for (std::size_t q = 0; q < nr && q < row.mean_mass_error.size(); ++q)
                mass[q].push_back(row.mean_mass_error[q]);
            far.push_back(row.far_mass);
            tv.push_back(row.tv_error);
            pred.push_back(row.prediction_error);
            one += row.exactly_one ? 1 : 0;
        }
        agg.mass_error_mean.resize(nr);
        agg.mass_error_se.resize(nr);
        for (std::size_t q = 0; q < nr; ++q) mean_se(mass[q], agg.mass_error_mean[q], agg.mass_error_se[q]);
        mean_se(far, agg.far_mass_mean, agg.far_mass_se);
        mean_se(tv, agg.tv_error_mean, agg.tv_error_se);
        mean_se(pred, agg.prediction_mean, agg.prediction_se);
        agg.exactly_one_fraction = agg.ok ? static_cast<double>(one) / agg.ok : 0.0;
        if (agg.ok > 0) {
            ns.push_back(static_cast<double>(n));
            for (std::size_t q = 0; q < nr; ++q) mass_means[q].push_back(agg.mass_error_mean[q]);
            pred_means.push_back(agg.prediction_mean);
        }
        rep.aggregates.push_back(std::move(agg));
    }
    for (std::size_t q = 0; q < nr; ++q) rep.mass_error_slope.push_back(log_log_slope(ns, mass_means[q]));
    rep.prediction_slope = log_log_slope(ns, pred_means);
    return rep;
}

ExperimentReport rate_sweep(const GroundTruthMixture& mix, const SweepConfig& cfg) {
    mix.validate();
    if (cfg.replications < 0) throw PreconditionError("replications must be >= 0");
    for (const long n : cfg.n_grid)
        if (n < 2) throw PreconditionError("every sweep sample size must be >= 2");
    const double r = lpc_constants(mix.ctx.d, mix.s(), mix.ctx.tau, mix.ctx.box).r;
    const std::vector<double> radii = cfg.r_e.empty() ? std::vector<double>{r} : cfg.r_e;
    for (double re : radii)
        if (!(re > 0.0) || re > r) throw PreconditionError("effective radius must satisfy 0 < r_e <= r");

    const std::size_t tasks = cfg.n_grid.size() * static_cast<std::size_t>(cfg.replications);
    std::vector<ReplicationRow> rows(tasks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
            const std::size_t ni = t / static_cast<std::size_t>(cfg.replications);
            const int rep = static_cast<int>(t % static_cast<std::size_t>(cfg.replications));
            const long n = cfg.n_grid[ni];
            rows[t] = run_replication(mix, cfg, n, rep, derive_seed(cfg.seed, ni, static_cast<std::uint64_t>(rep)));
        }
    };
    const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(std::max<std::size_t>(tasks, 1))));
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return aggregate(rows, radii, cfg.n_grid);
}

}  // namespace blasso
