#include "blasso_cli/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace blasso::cli {
namespace {

KappaRule parse_kappa_rule(const Config& cfg, const std::string& key, KappaRule fallback) {
    if (!cfg.has(key)) return fallback;
    const std::string v = cfg.get_string(key);
    if (v == "agnostic") return KappaRule::agnostic;
    if (v == "s_dependent") return KappaRule::s_dependent;
    if (v == "small_reg") return KappaRule::small_reg;
    if (v == "fixed") return KappaRule::fixed;
    cfg.fail(key, "expected agnostic, s_dependent, small_reg or fixed");
}

SeparationFormula parse_formula(const Config& cfg, const std::string& key) {
    if (!cfg.has(key)) return SeparationFormula::automatic;
    const std::string v = cfg.get_string(key);
    if (v == "automatic") return SeparationFormula::automatic;
    if (v == "general") return SeparationFormula::general;
    if (v == "one_dimensional") return SeparationFormula::one_dimensional;
    cfg.fail(key, "expected automatic, general or one_dimensional");
}

std::string to_string(SeparationFormula f) {
    switch (f) {
        case SeparationFormula::general: return "general";
        case SeparationFormula::one_dimensional: return "one_dimensional";
        default: return "automatic";
    }
}

// A list of d values, or one value broadcast to all coordinates.
Eigen::VectorXd coords(const Config& cfg, const std::string& key, int d) {
    const std::vector<double> v = cfg.get_double_list(key);
    if (v.size() == 1) return Eigen::VectorXd::Constant(d, v[0]);
    if (static_cast<int>(v.size()) != d) cfg.fail(key, "expected 1 or " + std::to_string(d) + " values");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), d);
}

int get_int(const Config& cfg, const std::string& key, int fallback, int lo) {
    const long v = cfg.get_long(key, fallback);
    if (v < lo || v > 2147483647L) cfg.fail(key, "must be an integer >= " + std::to_string(lo));
    return static_cast<int>(v);
}

double get_positive(const Config& cfg, const std::string& key, double fallback) {
    const double v = cfg.get_double(key, fallback);
    if (!(v > 0.0)) cfg.fail(key, "must be positive");
    return v;
}

std::string list(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

template <class T>
std::string list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

std::string to_string(KappaRule rule) {
    switch (rule) {
        case KappaRule::agnostic: return "agnostic";
        case KappaRule::s_dependent: return "s_dependent";
        case KappaRule::small_reg: return "small_reg";
        case KappaRule::fixed: return "fixed";
    }
    return "agnostic";
}

std::string to_string(TauRule rule) { return rule == TauRule::prediction ? "prediction" : "fixed"; }

RunConfig resolve_run_config(const Config& cfg, Command command, const Overrides& overrides) {
    RunConfig rc;

    const int d = get_int(cfg, "scenario.d", 1, 1);
    DomainBox box;
    box.t_lo = coords(cfg, "scenario.t_lo", d);
    box.t_hi = coords(cfg, "scenario.t_hi", d);
    box.u_min = cfg.get_double("scenario.u_min");
    box.u_max = cfg.get_double("scenario.u_max");
    try {
        box.validate();
    } catch (const Error& e) {
        cfg.fail("scenario.t_lo", e.what());
    }

    const double tau = get_positive(cfg, "kernel.tau", box.u_min);
    const std::string tau_rule = cfg.get_string("kernel.tau_rule", "fixed");
    if (tau_rule == "fixed")
        rc.tau_rule = TauRule::fixed;
    else if (tau_rule == "prediction")
        rc.tau_rule = TauRule::prediction;
    else
        cfg.fail("kernel.tau_rule", "expected fixed or prediction");
    const bool relaxed = cfg.get_bool("kernel.relaxed", false);
    rc.scenario.ctx = KernelContext(box, tau, relaxed);
    try {
        rc.scenario.ctx.validate();
    } catch (const Error& e) {
        cfg.fail("kernel.tau", e.what());
    }

    std::map<long, std::string> atom_keys;
    for (const auto& key : cfg.keys_with_prefix("scenario")) {
        const std::string rest = key.substr(std::string("scenario.").size());
        if (rest.rfind("atom", 0) != 0) continue;
        const std::size_t dot = rest.find('.');
        const std::string idx = rest.substr(4, dot == std::string::npos ? std::string::npos : dot - 4);
        if (idx.empty() || !std::all_of(idx.begin(), idx.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
            idx.size() > 6)
            cfg.fail(key, "atom keys have the form scenario.atom<N>.{weight,t,u}");
        atom_keys.emplace(std::stol(idx), key);
    }
    long expected = 0;
    for (const auto& [idx, key] : atom_keys) {
        if (idx != expected) cfg.fail(key, "atom indices must be contiguous from 0");
        const std::string p = "scenario.atom" + std::to_string(idx);
        const double w = cfg.get_double(p + ".weight");
        if (!(w > 0.0)) cfg.fail(p + ".weight", "must be positive");
        Location x{coords(cfg, p + ".t", d), coords(cfg, p + ".u", d)};
        if (!box.contains(x)) cfg.fail(p + ".t", "atom lies outside the domain box");
        rc.scenario.mu0.add(w, std::move(x));
        ++expected;
    }
    if (!rc.scenario.mu0.empty()) {
        if (std::abs(tv_norm(rc.scenario.mu0) - 1.0) > 1e-12)
            cfg.fail("scenario.atom0.weight", "atom weights must sum to 1");
        for (std::size_t a = 0; a < rc.scenario.mu0.size(); ++a)
            for (std::size_t b = a + 1; b < rc.scenario.mu0.size(); ++b)
                if (rc.scenario.mu0.atoms[a].x == rc.scenario.mu0.atoms[b].x)
                    cfg.fail("scenario.atom" + std::to_string(b) + ".t", "duplicate atom location");
    }

    SolverConfig& s = rc.solver;
    s.max_particles = get_int(cfg, "solver.max_particles", s.max_particles, 1);
    s.iterations = get_int(cfg, "solver.iterations", s.iterations, 0);
    s.eta_w = get_positive(cfg, "solver.eta_w", s.eta_w);
    s.eta_x = get_positive(cfg, "solver.eta_x", s.eta_x);
    s.step_growth = cfg.get_double("solver.step_growth", s.step_growth);
    if (!(s.step_growth >= 1.0)) cfg.fail("solver.step_growth", "must be >= 1");
    s.step_max = get_positive(cfg, "solver.step_max", s.step_max);
    s.merge_radius = cfg.get_double("solver.merge_radius", s.merge_radius);
    if (!(s.merge_radius >= 0.0)) cfg.fail("solver.merge_radius", "must be >= 0");
    s.prune_fraction = cfg.get_double("solver.prune_fraction", s.prune_fraction);
    if (!(s.prune_fraction >= 0.0 && s.prune_fraction < 1.0)) cfg.fail("solver.prune_fraction", "must be in [0, 1)");
    s.period = get_int(cfg, "solver.period", s.period, 1);
    s.tolerance = cfg.get_double("solver.tolerance", s.tolerance);
    if (!(s.tolerance >= 0.0)) cfg.fail("solver.tolerance", "must be >= 0");
    s.patience = get_int(cfg, "solver.patience", s.patience, 1);
    s.insertion_candidates = get_int(cfg, "solver.insertion_candidates", s.insertion_candidates, 0);

    if (cfg.has("experiment.n_grid")) rc.n_grid = cfg.get_long_list("experiment.n_grid");
    rc.replications = get_int(cfg, "experiment.replications", rc.replications, 1);
    rc.kappa_rule = parse_kappa_rule(cfg, "experiment.kappa_rule", KappaRule::agnostic);
    rc.kappa_fixed = cfg.get_double("experiment.kappa", 0.0);
    rc.r_e = cfg.get_double_list("experiment.r_e", {});
    rc.particles_per_atom = get_int(cfg, "experiment.particles_per_atom", rc.particles_per_atom, 1);

    rc.solve_n = cfg.get_long("solve.n", rc.solve_n);
    rc.data_path = cfg.get_string("solve.data", "");
    rc.solve_kappa_rule = parse_kappa_rule(cfg, "solve.kappa_rule", KappaRule::agnostic);
    rc.solve_kappa = cfg.get_double("solve.kappa", 0.0);

    GridSpec& g = rc.grid;
    g.t_res = get_int(cfg, "certify.t_res", g.t_res, 1);
    g.u_res = get_int(cfg, "certify.u_res", g.u_res, 1);
    g.region_t_res = get_int(cfg, "certify.region_t_res", g.region_t_res, 1);
    g.region_u_res = get_int(cfg, "certify.region_u_res", g.region_u_res, 1);
    g.lowdisc_points = get_int(cfg, "certify.lowdisc_points", g.lowdisc_points, 0);
    g.rays = get_int(cfg, "certify.rays", g.rays, 0);
    g.ray_steps = get_int(cfg, "certify.ray_steps", g.ray_steps, 1);
    g.slack = cfg.get_double("certify.slack", g.slack);
    if (!(g.slack >= 0.0)) cfg.fail("certify.slack", "must be >= 0");
    rc.formula = parse_formula(cfg, "certify.separation_formula");

    rc.out_dir = cfg.get_string("run.out", rc.out_dir);
    rc.seed = cfg.get_u64("run.seed", rc.seed);
    rc.threads = get_int(cfg, "run.threads", rc.threads, 1);
    for (const auto& key : cfg.keys_with_prefix("meta")) (void)cfg.get_string(key);
    cfg.reject_unused();

    if (overrides.out_dir) rc.out_dir = *overrides.out_dir;
    if (overrides.seed) rc.seed = *overrides.seed;
    if (overrides.threads) {
        if (*overrides.threads < 1) throw ConfigError("--threads must be >= 1", 0, 0);
        rc.threads = *overrides.threads;
    }

    const bool needs_atoms = command != Command::solve || rc.data_path.empty();
    if (needs_atoms && rc.scenario.mu0.empty())
        throw ConfigError("the scenario needs at least one atom (scenario.atom0.*)", 0, 0);
    const int s_count = std::max(1, rc.scenario.s());

    if (command == Command::rates) {
        if (rc.n_grid.empty()) cfg.fail("experiment.n_grid", "missing or empty sample-size grid");
        for (long n : rc.n_grid)
            if (n < 2) cfg.fail("experiment.n_grid", "every sample size must be >= 2");
        if (rc.kappa_rule == KappaRule::fixed && !(rc.kappa_fixed > 0.0))
            cfg.fail("experiment.kappa", "a fixed kappa must be positive");
        const double r = lpc_constants(d, s_count, tau, box).r;
        for (double re : rc.r_e)
            if (!(re > 0.0) || re > r)
                cfg.fail("experiment.r_e", "effective radii must lie in (0, " + format_double(r) + "]");
    }
    if (command == Command::solve) {
        if (rc.data_path.empty() && rc.solve_n < 1) cfg.fail("solve.n", "must be >= 1");
        if (rc.solve_kappa_rule == KappaRule::fixed && !(rc.solve_kappa > 0.0))
            cfg.fail("solve.kappa", "a fixed kappa must be positive");
        if (rc.solve_kappa_rule == KappaRule::s_dependent && rc.scenario.mu0.empty())
            cfg.fail("solve.kappa_rule", "s_dependent needs scenario atoms");
    }
    return rc;
}

std::string resolved_text(const RunConfig& rc) {
    std::ostringstream o;
    const DomainBox& box = rc.scenario.ctx.box;
    o << "scenario.d = " << rc.scenario.ctx.d << "\n";
    o << "scenario.t_lo = " << list(box.t_lo) << "\n";
    o << "scenario.t_hi = " << list(box.t_hi) << "\n";
    o << "scenario.u_min = " << format_double(box.u_min) << "\n";
    o << "scenario.u_max = " << format_double(box.u_max) << "\n";
    for (std::size_t j = 0; j < rc.scenario.mu0.size(); ++j) {
        const Atom& a = rc.scenario.mu0.atoms[j];
        const std::string p = "scenario.atom" + std::to_string(j);
        o << p << ".weight = " << format_double(a.weight) << "\n";
        o << p << ".t = " << list(a.x.t) << "\n";
        o << p << ".u = " << list(a.x.u) << "\n";
    }
    o << "kernel.tau = " << format_double(rc.scenario.ctx.tau) << "\n";
    o << "kernel.tau_rule = " << to_string(rc.tau_rule) << "\n";
    o << "kernel.relaxed = " << (rc.scenario.ctx.relaxed ? "true" : "false") << "\n";
    const SolverConfig& s = rc.solver;
    o << "solver.max_particles = " << s.max_particles << "\n";
    o << "solver.iterations = " << s.iterations << "\n";
    o << "solver.eta_w = " << format_double(s.eta_w) << "\n";
    o << "solver.eta_x = " << format_double(s.eta_x) << "\n";
    o << "solver.step_growth = " << format_double(s.step_growth) << "\n";
    o << "solver.step_max = " << format_double(s.step_max) << "\n";
    o << "solver.merge_radius = " << format_double(s.merge_radius) << "\n";
    o << "solver.prune_fraction = " << format_double(s.prune_fraction) << "\n";
    o << "solver.period = " << s.period << "\n";
    o << "solver.tolerance = " << format_double(s.tolerance) << "\n";
    o << "solver.patience = " << s.patience << "\n";
    o << "solver.insertion_candidates = " << s.insertion_candidates << "\n";
    if (!rc.n_grid.empty()) o << "experiment.n_grid = " << list(rc.n_grid) << "\n";
    o << "experiment.replications = " << rc.replications << "\n";
    o << "experiment.kappa_rule = " << to_string(rc.kappa_rule) << "\n";
    o << "experiment.kappa = " << format_double(rc.kappa_fixed) << "\n";
    if (!rc.r_e.empty()) o << "experiment.r_e = " << list(rc.r_e) << "\n";
    o << "experiment.particles_per_atom = " << rc.particles_per_atom << "\n";
    o << "solve.n = " << rc.solve_n << "\n";
    if (!rc.data_path.empty()) o << "solve.data = " << rc.data_path << "\n";
    o << "solve.kappa_rule = " << to_string(rc.solve_kappa_rule) << "\n";
    o << "solve.kappa = " << format_double(rc.solve_kappa) << "\n";
    const GridSpec& g = rc.grid;
    o << "certify.t_res = " << g.t_res << "\n";
    o << "certify.u_res = " << g.u_res << "\n";
    o << "certify.region_t_res = " << g.region_t_res << "\n";
    o << "certify.region_u_res = " << g.region_u_res << "\n";
    o << "certify.lowdisc_points = " << g.lowdisc_points << "\n";
    o << "certify.rays = " << g.rays << "\n";
    o << "certify.ray_steps = " << g.ray_steps << "\n";
    o << "certify.slack = " << format_double(g.slack) << "\n";
    o << "certify.separation_formula = " << to_string(rc.formula) << "\n";
    o << "run.seed = " << rc.seed << "\n";
    return o.str();
}

}  // namespace blasso::cli
