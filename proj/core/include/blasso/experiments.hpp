#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blasso/kernel.hpp"
#include "blasso/measure.hpp"
#include "blasso/solver.hpp"

namespace blasso {

// Ground truth mu0 with weights a_j summing to one. `ctx` fixes the box and the
// dimension; its tau is the default smoothing for metrics.
struct GroundTruthMixture {
    DiscreteMeasure mu0;
    KernelContext ctx;

    int s() const { return static_cast<int>(mu0.size()); }
    void validate() const;
};

SampleMatrix sample(const GroundTruthMixture& mix, long n, std::uint64_t seed);

struct RegionMasses {
    std::vector<double> errors;  // per target atom
    double far_mass = 0.0;
};

// |w_j0 - mu_hat_w(near_j(r_e))| per atom of `mu0_w`, plus the mass of mu_hat_w
// outside every near region. `r` is the radius r_e may not exceed.
RegionMasses region_mass_errors(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0_w, double r_e, double r,
                                const KernelContext& ctx);

// Same classification applied to mu_hat_w / W against the unit-mass weights a_j.
RegionMasses renormalized_mass_errors(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0, double r_e,
                                      double r, const KernelContext& ctx);

// L2 inner product of two Gaussian densities.
double gaussian_l2_inner(const Location& x, const Location& y);

// || Phi(mu_hat_w / W) - Phi mu0 ||^2 in L2.
double prediction_error(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0, const KernelContext& ctx);

struct SparsityReport {
    std::vector<int> atoms_per_region;
    int far_atoms = 0;
    bool exactly_one_each = false;
};

SparsityReport sparsity_check(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0, double r,
                              const KernelContext& ctx);

enum class KappaRule { agnostic, s_dependent, small_reg, fixed };
enum class TauRule { fixed, prediction };

struct SweepConfig {
    std::vector<long> n_grid;
    int replications = 10;
    KappaRule kappa_rule = KappaRule::agnostic;
    double kappa_fixed = 0.0;
    TauRule tau_rule = TauRule::fixed;
    double tau_fixed = 1.0;
    std::vector<double> r_e;  // effective radii; empty means {r}
    SolverConfig solver;
    int particles_per_atom = 3;  // initial particles = particles_per_atom * s
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ReplicationRow {
    long n = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    double tau = 0.0;
    double kappa = 0.0;
    bool failed = false;
    std::string error;
    int iterations = 0;
    bool converged = false;
    int atoms = 0;
    bool exactly_one = false;
    double tv_error = 0.0;                 // tv(mu_hat_w) - tv(mu0_w)
    double far_mass = 0.0;                 // at the first effective radius
    std::vector<double> mass_errors;       // per target atom, first effective radius
    std::vector<double> mean_mass_error;   // per effective radius, mean over atoms
    std::vector<double> mean_renorm_error; // per effective radius, mean over atoms
    double prediction_error = 0.0;
    double runtime_seconds = 0.0;          // wall clock; not part of serialized output
};

struct SweepAggregate {
    long n = 0;
    int ok = 0;  // replications that completed
    double tau = 0.0;
    double kappa = 0.0;
    std::vector<double> mass_error_mean, mass_error_se;  // per effective radius
    double far_mass_mean = 0.0, far_mass_se = 0.0;
    double tv_error_mean = 0.0, tv_error_se = 0.0;
    double prediction_mean = 0.0, prediction_se = 0.0;
    double exactly_one_fraction = 0.0;
};

struct ExperimentReport {
    std::vector<double> r_e;
    std::vector<ReplicationRow> rows;
    std::vector<SweepAggregate> aggregates;
    std::vector<double> mass_error_slope;  // per effective radius
    double prediction_slope = 0.0;
};

// Counter-based seed split: a distinct stream for every (a, b) under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

ReplicationRow run_replication(const GroundTruthMixture& mix, const SweepConfig& cfg, long n, int replication,
                               std::uint64_t seed);

ExperimentReport aggregate(const std::vector<ReplicationRow>& rows, const std::vector<double>& r_e,
                           const std::vector<long>& n_grid);

ExperimentReport rate_sweep(const GroundTruthMixture& mix, const SweepConfig& cfg);

}  // namespace blasso
