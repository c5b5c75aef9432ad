#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blasso/blasso.hpp"

namespace blasso::cli {

struct Overrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

struct RunConfig {
    GroundTruthMixture scenario;  // mu0 may be empty for `solve` with a data file
    TauRule tau_rule = TauRule::fixed;
    SolverConfig solver;

    std::vector<long> n_grid;
    int replications = 10;
    KappaRule kappa_rule = KappaRule::agnostic;
    double kappa_fixed = 0.0;
    std::vector<double> r_e;
    int particles_per_atom = 3;

    long solve_n = 10000;
    std::string data_path;
    KappaRule solve_kappa_rule = KappaRule::agnostic;
    double solve_kappa = 0.0;

    GridSpec grid;
    SeparationFormula formula = SeparationFormula::automatic;

    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int threads = 1;
};

enum class Command { certify, solve, rates };

// Reads every section, applies overrides and validates the values the command
// depends on. Throws ConfigError with the offending position.
RunConfig resolve_run_config(const Config& cfg, Command command, const Overrides& overrides);

// Complete `section.key = value` text for `rc`, defaults included; parsing it
// back yields the same RunConfig.
std::string resolved_text(const RunConfig& rc);

std::string to_string(KappaRule rule);
std::string to_string(TauRule rule);

}  // namespace blasso::cli
