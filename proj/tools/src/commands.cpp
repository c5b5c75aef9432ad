#include "blasso_cli/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "blasso_cli/invariants.hpp"

namespace blasso::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

std::string meta_text(const std::string& file, const std::string& command, const CsvTable& table,
                      const std::string& resolved, const std::vector<std::string>& extra) {
    std::ostringstream o;
    o << "# blasso " << kVersion << " output metadata; the run.* and scenario.* keys below reproduce the run\n";
    o << "meta.file = " << file << "\n";
    o << "meta.command = " << command << "\n";
    std::string cols;
    for (std::size_t i = 0; i < table.header().size(); ++i) cols += (i ? ", " : "") + table.header()[i];
    o << "meta.columns = " << cols << "\n";
    o << "meta.rows = " << table.rows() << "\n";
    for (const auto& line : extra) o << line << "\n";
    o << resolved;
    return o.str();
}

void emit(const fs::path& dir, const std::string& name, const std::string& command, const CsvTable& table,
          const RunConfig& rc, const std::vector<std::string>& extra = {}) {
    const std::string file = name + ".csv";
    table.write((dir / file).string());
    write_text_file((dir / (name + ".meta")).string(), meta_text(file, command, table, resolved_text(rc), extra));
}

fs::path prepare_out(const RunConfig& rc) {
    const fs::path dir(rc.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + rc.out_dir + "'");
    return dir;
}

void add_location_columns(std::vector<std::string>& header, const std::string& prefix, int d) {
    for (int k = 0; k < d; ++k) header.push_back(prefix + "t" + std::to_string(k + 1));
    for (int k = 0; k < d; ++k) header.push_back(prefix + "u" + std::to_string(k + 1));
}

void add_location(CsvTable::Row& row, const Location& x, int d) {
    for (int k = 0; k < d; ++k) row.add(k < x.dim() ? x.t[k] : std::nan(""));
    for (int k = 0; k < d; ++k) row.add(k < x.dim() ? x.u[k] : std::nan(""));
}

double kappa_for(KappaRule rule, double fixed, const RecommendedParameters& rp) {
    switch (rule) {
        case KappaRule::agnostic: return rp.kappa_agnostic;
        case KappaRule::s_dependent: return rp.kappa_s_dependent;
        case KappaRule::small_reg: return rp.kappa_small_reg;
        case KappaRule::fixed: return fixed;
    }
    return fixed;
}

}  // namespace

int run_certify(const RunConfig& rc, std::ostream& log) {
    const fs::path dir = prepare_out(rc);
    const KernelContext& ctx = rc.scenario.ctx;
    const int d = ctx.d, s = rc.scenario.s();
    const LpcConstants consts = lpc_constants(d, s, ctx.tau, ctx.box, rc.formula);

    std::vector<Location> anchors;
    for (const auto& a : rc.scenario.mu0.atoms) anchors.push_back(a.x);

    NondegeneracyReport report;
    CertificateSet certs;
    std::string solve_error;
    try {
        const CertificateSystem sys = build_upsilon(anchors, ctx);
        certs = solve_certificates(sys);
        report = verify_nondegeneracy(certs, sys, rc.scenario.mu0, consts, rc.grid);
    } catch (const SingularSystemError& e) {
        solve_error = e.what();
        report.separation = separation_check(rc.scenario.mu0, ctx, consts);
        report.all_pass = false;
    }

    CsvTable summary({"d", "s", "tau", "r", "delta", "delta_tau", "min_semidistance", "separated", "eps0", "eps2",
                      "eps0_tilde", "eps2_tilde", "points", "norms_pass", "all_pass", "error"});
    summary.row()
        .add(d)
        .add(s)
        .add(ctx.tau)
        .add(consts.r)
        .add(consts.delta)
        .add(consts.delta_tau)
        .add(report.separation.min_semidistance)
        .add(report.separation.satisfied)
        .add(consts.eps0)
        .add(consts.eps2)
        .add(consts.eps0_tilde)
        .add(consts.eps2_tilde)
        .add(report.points)
        .add(report.norms_pass)
        .add(report.all_pass)
        .add(solve_error);
    emit(dir, "certify_summary", "certify", summary, rc);

    std::vector<std::string> ch{"clause", "pass", "worst_margin", "checked", "violations"};
    add_location_columns(ch, "worst_", d);
    CsvTable clauses(ch);
    for (const auto& c : report.clauses) {
        auto row = clauses.row();
        row.add(c.name).add(c.pass).add(c.worst_margin).add(c.checked).add(c.violations);
        add_location(row, c.worst_point, d);
    }
    emit(dir, "certify_clauses", "certify", clauses, rc);

    CsvTable cert_table({"kind", "index", "p_norm", "residual", "condition_estimate", "solver"});
    if (solve_error.empty()) {
        auto add = [&](const CertificateSolution& c) {
            cert_table.row()
                .add(c.kind == CertificateKind::global ? "global" : "local")
                .add(c.index)
                .add(c.p_norm)
                .add(c.residual)
                .add(c.condition_estimate)
                .add(c.solver == LinearSolver::cholesky ? "cholesky" : "pivoted_lu");
        };
        add(certs.global);
        for (const auto& c : certs.locals) add(c);
    }
    emit(dir, "certify_certificates", "certify", cert_table, rc);

    log << "separation: min semi-distance " << format_double(report.separation.min_semidistance) << ", required "
        << format_double(consts.delta_tau) << (report.separation.satisfied ? " (satisfied)\n" : " (FAILED)\n");
    if (!solve_error.empty()) log << "certificate system: " << solve_error << "\n";
    for (const auto& c : report.clauses)
        if (!c.pass)
            log << "clause " << c.name << " FAILED: " << c.violations << " violations, worst margin "
                << format_double(c.worst_margin) << "\n";
    log << "certify: " << (report.all_pass ? "PASS" : "FAIL") << "\n";
    return report.all_pass ? kExitOk : kExitCheckFailed;
}

SampleMatrix load_samples(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file '" + path + "'", 0, 0);
    std::vector<double> values;
    std::string line;
    long lineno = 0, rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                cells.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (rows == 0 && values.empty() && lineno == 1) continue;
            throw ConfigError("data file '" + path + "': non-numeric value", static_cast<int>(lineno), 1);
        }
        if (static_cast<int>(cells.size()) != d)
            throw ConfigError("data file '" + path + "': expected " + std::to_string(d) + " columns",
                              static_cast<int>(lineno), 1);
        for (double v : cells)
            if (!std::isfinite(v))
                throw ConfigError("data file '" + path + "': non-finite value", static_cast<int>(lineno), 1);
        values.insert(values.end(), cells.begin(), cells.end());
        ++rows;
    }
    if (rows == 0) throw ConfigError("data file '" + path + "' has no samples", 0, 0);
    SampleMatrix X(rows, d);
    for (long i = 0; i < rows; ++i)
        for (int k = 0; k < d; ++k) X(i, k) = values[static_cast<std::size_t>(i * d + k)];
    return X;
}

int run_solve(const RunConfig& rc, std::ostream& log) {
    SampleMatrix X = rc.data_path.empty() ? sample(rc.scenario, rc.solve_n, derive_seed(rc.seed, 0xda7a, 0))
                                          : load_samples(rc.data_path, rc.scenario.ctx.d);
    const fs::path dir = prepare_out(rc);
    const KernelContext& base = rc.scenario.ctx;
    const int d = base.d;
    const long n = static_cast<long>(X.rows());
    const std::optional<int> s_hint =
        rc.scenario.mu0.empty() ? std::nullopt : std::optional<int>(rc.scenario.s());
    const double tau = rc.tau_rule == TauRule::prediction
                           ? recommended_parameters(std::max(n, 2L), s_hint, d, base.tau, base.box).tau_prediction
                           : base.tau;
    const KernelContext ctx(base.box, tau, base.relaxed || tau > base.box.u_min);
    const RecommendedParameters rp = recommended_parameters(std::max(n, 2L), s_hint, d, tau, base.box);
    const double kappa = kappa_for(rc.solve_kappa_rule, rc.solve_kappa, rp);

    const ObjectiveContext octx(std::move(X), kappa, ctx);
    SolverConfig scfg = rc.solver;
    scfg.seed = derive_seed(rc.seed, 0x501e, 0);
    const SolveResult res = cpgd_solve(initialize_particles(octx, scfg), octx, scfg);
    const double half_c = 0.5 * octx.data_constant();

    std::vector<std::string> mh{"index", "weight_w", "mass"};
    add_location_columns(mh, "", d);
    CsvTable measure(mh);
    for (std::size_t j = 0; j < res.measure.size(); ++j) {
        const Atom& a = res.measure.atoms[j];
        auto row = measure.row();
        row.add(static_cast<long>(j)).add(a.weight).add(a.weight / weight_function(a.x, tau));
        add_location(row, a.x, d);
    }
    emit(dir, "solve_measure", "solve", measure, rc);

    CsvTable trace({"iteration", "objective", "fidelity", "tv", "eta_w", "eta_x", "atoms", "event"});
    for (const auto& t : res.trace)
        trace.row()
            .add(t.iteration)
            .add(t.objective_shifted + half_c)
            .add(t.fidelity_shifted + half_c)
            .add(t.tv)
            .add(t.eta_w)
            .add(t.eta_x)
            .add(t.atoms)
            .add(t.event);
    emit(dir, "solve_trace", "solve", trace, rc);

    const double j_hat = objective(res.measure, octx);
    double j_true = std::nan("");
    bool accepted = true;
    const bool has_truth = !rc.scenario.mu0.empty();
    if (has_truth) {
        const DiscreteMeasure mu0_w = reparametrize(rc.scenario.mu0, tau, Direction::to_omega);
        j_true = objective(mu0_w, octx);
        accepted = acceptance_check(res.measure, mu0_w, octx);
    }
    CsvTable summary({"n", "tau", "kappa", "iterations", "converged", "stop_reason", "atoms", "objective",
                      "objective_truth", "acceptance", "has_truth"});
    summary.row()
        .add(n)
        .add(tau)
        .add(kappa)
        .add(res.iterations)
        .add(res.converged)
        .add(res.stop_reason)
        .add(static_cast<long>(res.measure.size()))
        .add(j_hat)
        .add(j_true)
        .add(accepted)
        .add(has_truth);
    emit(dir, "solve_summary", "solve", summary, rc);

    log << "solve: " << res.measure.size() << " atoms after " << res.iterations << " iterations (" << res.stop_reason
        << "), J = " << format_double(j_hat) << "\n";
    if (has_truth)
        log << "acceptance J(mu_hat) <= J(mu0_w): " << (accepted ? "PASS" : "FAIL") << " (J(mu0_w) = "
            << format_double(j_true) << ")\n";
    return accepted ? kExitOk : kExitCheckFailed;
}

int run_rates(const RunConfig& rc, std::ostream& log) {
    const fs::path dir = prepare_out(rc);
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
    const ExperimentReport rep = rate_sweep(rc.scenario, cfg);
    const int s = rc.scenario.s();
    const std::size_t nr = rep.r_e.size();

    std::vector<std::string> rh{"n", "replication", "seed", "tau", "kappa", "failed", "error", "iterations",
                                "converged", "atoms", "exactly_one", "tv_error", "far_mass"};
    for (int j = 0; j < s; ++j) rh.push_back("mass_error_" + std::to_string(j));
    for (std::size_t q = 0; q < nr; ++q) rh.push_back("mean_mass_error_r" + std::to_string(q));
    for (std::size_t q = 0; q < nr; ++q) rh.push_back("mean_renorm_error_r" + std::to_string(q));
    rh.push_back("prediction_error");
    CsvTable rows(rh);
    long failed = 0;
    for (const auto& r : rep.rows) {
        auto row = rows.row();
        row.add(r.n)
            .add(r.replication)
            .add(r.seed)
            .add(r.tau)
            .add(r.kappa)
            .add(r.failed)
            .add(r.error)
            .add(r.iterations)
            .add(r.converged)
            .add(r.atoms)
            .add(r.exactly_one)
            .add(r.tv_error)
            .add(r.far_mass);
        for (int j = 0; j < s; ++j)
            row.add(static_cast<std::size_t>(j) < r.mass_errors.size() ? r.mass_errors[j] : std::nan(""));
        for (std::size_t q = 0; q < nr; ++q)
            row.add(q < r.mean_mass_error.size() ? r.mean_mass_error[q] : std::nan(""));
        for (std::size_t q = 0; q < nr; ++q)
            row.add(q < r.mean_renorm_error.size() ? r.mean_renorm_error[q] : std::nan(""));
        row.add(r.prediction_error);
        failed += r.failed ? 1 : 0;
    }
    std::vector<std::string> radii_meta;
    for (std::size_t q = 0; q < nr; ++q)
        radii_meta.push_back("meta.r" + std::to_string(q) + " = " + format_double(rep.r_e[q]));
    emit(dir, "rates_replications", "rates", rows, rc, radii_meta);

    std::vector<std::string> ah{"n", "ok", "tau", "kappa"};
    for (std::size_t q = 0; q < nr; ++q) {
        ah.push_back("mass_error_mean_r" + std::to_string(q));
        ah.push_back("mass_error_se_r" + std::to_string(q));
    }
    for (const char* c : {"far_mass_mean", "far_mass_se", "tv_error_mean", "tv_error_se", "prediction_mean",
                          "prediction_se", "exactly_one_fraction"})
        ah.push_back(c);
    for (std::size_t q = 0; q < nr; ++q) ah.push_back("mass_error_slope_r" + std::to_string(q));
    ah.push_back("prediction_slope");
    CsvTable agg(ah);
    for (const auto& a : rep.aggregates) {
        auto row = agg.row();
        row.add(a.n).add(a.ok).add(a.tau).add(a.kappa);
        for (std::size_t q = 0; q < nr; ++q) row.add(a.mass_error_mean[q]).add(a.mass_error_se[q]);
        row.add(a.far_mass_mean)
            .add(a.far_mass_se)
            .add(a.tv_error_mean)
            .add(a.tv_error_se)
            .add(a.prediction_mean)
            .add(a.prediction_se)
            .add(a.exactly_one_fraction);
        for (std::size_t q = 0; q < nr; ++q) row.add(rep.mass_error_slope[q]);
        row.add(rep.prediction_slope);
    }
    std::vector<std::string> slope_meta = radii_meta;
    slope_meta.push_back("meta.note = slope targets and tolerances are engineering choices, not derived bounds");
    emit(dir, "rates_aggregate", "rates", agg, rc, slope_meta);

    CsvTable slopes({"quantity", "r_e", "slope", "target", "tolerance"});
    for (std::size_t q = 0; q < nr; ++q) slopes.row().add("mass_error").add(rep.r_e[q]).add(rep.mass_error_slope[q]).add(-0.5).add(0.15);
    slopes.row().add("prediction").add(std::nan("")).add(rep.prediction_slope).add(-1.0).add(0.2);
    emit(dir, "rates_slopes", "rates", slopes, rc, slope_meta);

    for (std::size_t q = 0; q < nr; ++q)
        log << "mass error slope (r_e = " << format_double(rep.r_e[q]) << "): " << format_double(rep.mass_error_slope[q])
            << "\n";
    log << "prediction slope: " << format_double(rep.prediction_slope) << "\n";
    if (failed) log << "warning: " << failed << " replications failed; see the error column\n";
    return kExitOk;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reparametrized Beurling-LASSO for Gaussian mixtures", "blasso"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides run.out)");
        sub->add_option("--seed", seed, "master seed (overrides run.seed)");
        sub->add_option("--threads", threads, "worker threads (overrides run.threads)");
    };
    CLI::App* certify = app.add_subcommand("certify", "build and verify dual certificates");
    CLI::App* solve = app.add_subcommand("solve", "fit a measure with conic particle gradient descent");
    CLI::App* rates = app.add_subcommand("rates", "run an estimation/prediction rate sweep");
    add_run_flags(certify);
    add_run_flags(solve);
    add_run_flags(rates);

    CLI::App* check = app.add_subcommand("kernel-check", "randomized kernel and geometry invariant suites");
    long samples = 1000;
    std::uint64_t check_seed = 1;
    std::string fault = "none";
    std::optional<std::string> check_out;
    check->add_option("--samples", samples, "draws per suite and dimension");
    check->add_option("--seed", check_seed, "random seed");
    check->add_option("--inject-fault", fault, "corrupt a library result before checking")
        ->check(CLI::IsMember({"none", "christoffel-sign"}));
    check->add_option("--out", check_out, "write kernel_check.csv to this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (check->parsed()) {
            if (samples < 1) {
                err << "error: --samples must be >= 1\n";
                return kExitUsage;
            }
            const auto results = run_kernel_invariants(
                samples, check_seed, fault == "christoffel-sign" ? Fault::christoffel_sign : Fault::none);
            CsvTable table({"suite", "checked", "failures", "max_error", "tolerance", "pass"});
            bool all = true;
            for (const auto& r : results) {
                out << (r.pass() ? "PASS " : "FAIL ") << r.suite << ": " << r.checked << " checks, max error "
                    << format_double(r.max_error) << " (tolerance " << format_double(r.tolerance) << ")\n";
                table.row().add(r.suite).add(r.checked).add(r.failures).add(r.max_error).add(r.tolerance).add(r.pass());
                all = all && r.pass();
            }
            if (check_out) {
                std::error_code ec;
                fs::create_directories(*check_out, ec);
                table.write((fs::path(*check_out) / "kernel_check.csv").string());
            }
            out << "kernel-check: " << (all ? "PASS" : "FAIL") << "\n";
            return all ? kExitOk : kExitCheckFailed;
        }

        const Command command = certify->parsed() ? Command::certify : solve->parsed() ? Command::solve : Command::rates;
        const RunConfig rc = resolve_run_config(Config::load(config_path), command, {out_dir, seed, threads});
        switch (command) {
            case Command::certify: return run_certify(rc, out);
            case Command::solve: return run_solve(rc, out);
            case Command::rates: return run_rates(rc, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace blasso::cli
