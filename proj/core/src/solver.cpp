#include "blasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>

#include "blasso/error.hpp"
#include "blasso/geometry.hpp"

namespace blasso {

struct ObjectiveContext::ConstantCache {
    std::once_flag once;
    double value = 0.0;
};

ObjectiveContext::ObjectiveContext(SampleMatrix samples, double kappa, KernelContext ctx)
    : samples_(std::move(samples)), kappa_(kappa), ctx_(std::move(ctx)), cache_(std::make_shared<ConstantCache>()) {
    ctx_.validate();
    if (samples_.rows() < 1) throw PreconditionError("the objective needs at least one sample");
    if (samples_.cols() != ctx_.d) throw DimensionError("sample matrix has the wrong number of columns");
    if (!samples_.allFinite()) throw DomainError("samples must be finite");
    if (!std::isfinite(kappa_) || !(kappa_ > 0.0)) throw DomainError("kappa must be positive and finite");
    witness_ = std::make_shared<const WitnessEvaluator>(samples_, ctx_);
}

double ObjectiveContext::data_constant() const {
    std::call_once(cache_->once, [this] {
        const Eigen::Index n = samples_.rows();
        const int d = ctx_.d;
        const double tau2 = ctx_.tau * ctx_.tau;
        const double c = std::pow(2.0 * std::numbers::pi * tau2, -0.5 * d);
        const double nn = static_cast<double>(n);
        if (d == 1) {
            const GaussianSum1d sums(samples_.data(), n, tau2);
            double total = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) total += sums.sums(samples_(i, 0), tau2)[0];
            cache_->value = c * total / (nn * nn);
            return;
        }
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double row = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                double e = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double z = samples_(i, k) - samples_(j, k);
                    e += z * z;
                }
                row += std::exp(-0.5 * e / tau2);
            }
            off += row;
        }
        cache_->value = c * (nn + 2.0 * off) / (nn * nn);
    });
    return cache_->value;
}

namespace {

struct Evaluation {
    ObjectiveTerms terms;
    double value = 0.0;  // shifted objective
    std::vector<double> gw;
    std::vector<Eigen::VectorXd> gx;
};

Evaluation evaluate(const DiscreteMeasure& mu, const ObjectiveContext& octx, bool with_gradient) {
    const KernelContext& ctx = octx.kernel();
    const std::size_t m = mu.size();
    Evaluation E;
    std::vector<WitnessJet> wit(m);
    for (std::size_t j = 0; j < m; ++j) wit[j] = octx.witness().jet(mu.atoms[j].x);

    if (with_gradient) {
        E.gw.assign(m, 0.0);
        E.gx.assign(m, Eigen::VectorXd::Zero(2 * ctx.d));
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double wj = mu.atoms[j].weight;
        E.terms.tv += wj;
        E.terms.linear += wj * wit[j].value;
        E.terms.quadratic += wj * wj;
        if (with_gradient) E.gw[j] += wj;
        for (std::size_t l = j + 1; l < m; ++l) {
            const double wl = mu.atoms[l].weight;
            if (with_gradient) {
                const KernelDerivatives D = kernel_derivatives(mu.atoms[j].x, mu.atoms[l].x, ctx, 1);
                E.terms.quadratic += 2.0 * wj * wl * D.value;
                E.gw[j] += wl * D.value;
                E.gw[l] += wj * D.value;
                E.gx[j] += wl * D.grad1;
                E.gx[l] += wj * D.grad2;
            } else {
                E.terms.quadratic += 2.0 * wj * wl * k_norm(mu.atoms[j].x, mu.atoms[l].x, ctx);
            }
        }
    }
    if (with_gradient) {
        for (std::size_t j = 0; j < m; ++j) {
            const double wj = mu.atoms[j].weight;
            E.gw[j] += octx.kappa() - wit[j].value;
            E.gx[j] = wj * (E.gx[j] - wit[j].gradient);
        }
    }
    E.value = E.terms.shifted_objective(octx.kappa());
    return E;
}

Location merge_locations(const Atom& a, const Atom& b, const KernelContext& ctx) {
    const double half_tau2 = 0.5 * ctx.tau * ctx.tau;
    const double wa = a.weight, wb = b.weight, ws = wa + wb;
    const double fa = ws > 0.0 ? wa / ws : 0.5, fb = 1.0 - fa;
    Location x = a.x;
    for (int k = 0; k < ctx.d; ++k) {
        const double ha = std::sqrt(a.x.u[k] * a.x.u[k] + half_tau2);
        const double hb = std::sqrt(b.x.u[k] * b.x.u[k] + half_tau2);
        const double h = fa * ha + fb * hb;
        x.t[k] = fa * a.x.t[k] + fb * b.x.t[k];
        x.u[k] = std::sqrt(std::max(h * h - half_tau2, 0.0));
    }
    return ctx.box.clamp(x);
}

TraceRow make_row(int it, const Evaluation& E, double eta_w, double eta_x, std::size_t atoms, const char* event) {
    TraceRow r;
    r.iteration = it;
    r.objective_shifted = E.value;
    r.fidelity_shifted = E.terms.shifted_fidelity();
    r.tv = E.terms.tv;
    r.eta_w = eta_w;
    r.eta_x = eta_x;
    r.atoms = static_cast<int>(atoms);
    r.event = event;
    return r;
}

}  // namespace

ObjectiveTerms objective_terms(const DiscreteMeasure& mu_w, const ObjectiveContext& octx) {
    validate_measure(mu_w, octx.kernel().d);
    return evaluate(mu_w, octx, false).terms;
}

double objective_shifted(const DiscreteMeasure& mu_w, const ObjectiveContext& octx) {
    return objective_terms(mu_w, octx).shifted_objective(octx.kappa());
}

double objective(const DiscreteMeasure& mu_w, const ObjectiveContext& octx) {
    return objective_shifted(mu_w, octx) + 0.5 * octx.data_constant();
}

ObjectiveGradient objective_gradient(const DiscreteMeasure& mu_w, const ObjectiveContext& octx) {
    validate_measure(mu_w, octx.kernel().d);
    Evaluation E = evaluate(mu_w, octx, true);
    return {std::move(E.gw), std::move(E.gx)};
}

DiscreteMeasure initialize_particles(const ObjectiveContext& octx, const SolverConfig& cfg) {
    if (cfg.max_particles < 1) throw PreconditionError("max_particles must be >= 1");
    const KernelContext& ctx = octx.kernel();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, octx.n() - 1);
    const double u0 = std::sqrt(ctx.box.u_min * ctx.box.u_max);
    DiscreteMeasure mu;
    for (int k = 0; k < cfg.max_particles; ++k) {
        const Eigen::Index i = pick(rng);
        Location x(octx.samples().row(i).transpose(), Eigen::VectorXd::Constant(ctx.d, u0));
        x = ctx.box.clamp(x);
        const double w = weight_function(x, ctx.tau) / cfg.max_particles;
        mu.add(w, std::move(x));
    }
    return mu;
}

DiscreteMeasure prune_merge(const DiscreteMeasure& mu_w, const SolverConfig& cfg, const KernelContext& ctx) {
    const double threshold = cfg.prune_fraction * tv_norm(mu_w);
    DiscreteMeasure out;
    for (const auto& a : mu_w.atoms)
        if (a.weight > 0.0 && a.weight >= threshold) out.atoms.push_back(a);

    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < out.size() && !merged; ++i)
            for (std::size_t j = i + 1; j < out.size() && !merged; ++j) {
                if (semi_distance(out.atoms[i].x, out.atoms[j].x, ctx) <= cfg.merge_radius) {
                    out.atoms[i].x = merge_locations(out.atoms[i], out.atoms[j], ctx);
                    out.atoms[i].weight += out.atoms[j].weight;
                    out.atoms.erase(out.atoms.begin() + static_cast<std::ptrdiff_t>(j));
                    merged = true;
                }
            }
    }
    return out;
}

SolveResult cpgd_solve(const DiscreteMeasure& init, const ObjectiveContext& octx, const SolverConfig& cfg) {
    const KernelContext& ctx = octx.kernel();
    if (!(cfg.eta_w > 0.0) || !(cfg.eta_x > 0.0)) throw PreconditionError("solver steps must be positive");
    if (cfg.period < 1 || cfg.iterations < 0) throw PreconditionError("invalid solver schedule");
    validate_measure(init, ctx.d);
    for (const auto& a : init.atoms)
        if (!ctx.box.contains(a.x, 1e-12)) throw PreconditionError("initial atoms must lie in the domain box");

    SolveResult res;
    DiscreteMeasure mu = init;
    for (auto& a : mu.atoms) a.x = ctx.box.clamp(a.x);

    std::mt19937_64 rng(cfg.seed ^ 0xa0761d6478bd642fULL);
    std::vector<Eigen::Index> candidates;
    {
        std::uniform_int_distribution<Eigen::Index> pick(0, octx.n() - 1);
        for (int c = 0; c < cfg.insertion_candidates; ++c) candidates.push_back(pick(rng));
    }
    const double u0 = std::sqrt(ctx.box.u_min * ctx.box.u_max);
    const double exclusion = kEps3Radius / std::sqrt(static_cast<double>(ctx.d));

    double eta_w = cfg.eta_w, eta_x = cfg.eta_x;
    Evaluation E = evaluate(mu, octx, true);
    res.trace.push_back(make_row(0, E, eta_w, eta_x, mu.size(), "init"));
    if (!std::isfinite(E.value)) {
        res.measure = mu;
        res.stop_reason = "non-finite objective";
        return res;
    }

    int stall = 0;
    int it = 0;
    for (it = 1; it <= cfg.iterations; ++it) {
        if (it % cfg.period == 0) {
            mu = prune_merge(mu, cfg, ctx);
            E = evaluate(mu, octx, true);
            res.trace.push_back(make_row(it, E, eta_w, eta_x, mu.size(), "prune_merge"));

            // Probe sample points away from every atom; an atom is added where the
            // first variation is negative.
            double best = 0.0;
            Location best_x;
            for (const Eigen::Index ci : candidates) {
                Location c(octx.samples().row(ci).transpose(), Eigen::VectorXd::Constant(ctx.d, u0));
                c = ctx.box.clamp(c);
                bool isolated = true;
                for (const auto& a : mu.atoms)
                    if (semi_distance(a.x, c, ctx) <= exclusion) {
                        isolated = false;
                        break;
                    }
                if (!isolated) continue;
                double first_variation = octx.kappa() - octx.witness().value(c);
                for (const auto& a : mu.atoms) first_variation += a.weight * k_norm(a.x, c, ctx);
                if (first_variation < best) {
                    best = first_variation;
                    best_x = c;
                }
            }
            if (best < 0.0) {
                mu.add(-0.5 * best, best_x);
                E = evaluate(mu, octx, true);
                res.trace.push_back(make_row(it, E, eta_w, eta_x, mu.size(), "insert"));
                stall = 0;
            }
        }
        if (mu.empty()) {
            res.converged = true;
            res.stop_reason = "empty measure";
            break;
        }

        DiscreteMeasure trial = mu;
        for (std::size_t j = 0; j < mu.size(); ++j) {
            Atom& a = trial.atoms[j];
            const double wj = mu.atoms[j].weight;
            a.weight = wj * std::exp(std::clamp(-eta_w * E.gw[j], -50.0, 50.0));
            if (wj > 0.0) {
                const Eigen::VectorXd gdiag = metric_at(mu.atoms[j].x, ctx).diag;
                const Eigen::VectorXd step = (E.gx[j] / wj).cwiseQuotient(gdiag);
                a.x = ctx.box.clamp(Location::from_stacked(mu.atoms[j].x.stacked() - eta_x * step));
            }
        }
        Evaluation T = evaluate(trial, octx, true);
        if (std::isfinite(T.value) && T.value <= E.value) {
            const double decrease = E.value - T.value;
            stall = decrease <= cfg.tolerance * std::max(std::abs(E.value), 1e-300) ? stall + 1 : 0;
            mu = std::move(trial);
            E = std::move(T);
            res.trace.push_back(make_row(it, E, eta_w, eta_x, mu.size(), "step"));
            eta_w = std::min(eta_w * cfg.step_growth, cfg.step_max);
            eta_x = std::min(eta_x * cfg.step_growth, cfg.step_max);
            if (stall >= cfg.patience) {
                res.converged = true;
                res.stop_reason = "tolerance";
                break;
            }
        } else {
            eta_w *= 0.5;
            eta_x *= 0.5;
            if (eta_w < 1e-14 * cfg.eta_w || eta_x < 1e-14 * cfg.eta_x) {
                res.converged = true;
                res.stop_reason = "step underflow";
                break;
            }
        }
    }
    if (res.stop_reason.empty()) res.stop_reason = "iteration cap";
    res.iterations = std::min(it, cfg.iterations);

    res.measure = prune_merge(mu, cfg, ctx);
    return res;
}

bool acceptance_check(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0_w, const ObjectiveContext& octx) {
    const double j0 = objective(mu0_w, octx);
    return objective(mu_hat_w, octx) <= j0 + 1e-12 * std::abs(j0);
}

RecommendedParameters recommended_parameters(long n, std::optional<int> s_hint, int d, double tau,
                                             const DomainBox& box) {
    if (n < 2) throw PreconditionError("recommended_parameters needs n >= 2");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (s_hint && *s_hint < 1) throw PreconditionError("s hint must be >= 1");
    RecommendedParameters p;
    const double nn = static_cast<double>(n);
    p.rho_n = std::sqrt(4.0 / (std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::pow(tau, d) * nn));
    p.kappa_agnostic = p.rho_n / std::sqrt(2.0);
    p.kappa_s_dependent = s_hint ? p.rho_n / std::sqrt(2.0 * *s_hint) : std::numeric_limits<double>::quiet_NaN();
    p.kappa_small_reg = p.rho_n * p.rho_n;
    p.tau_prediction = std::sqrt(2.0) * box.u_min / std::sqrt(std::log(nn));
    return p;
}

}  // namespace blasso
