#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blasso/kernel.hpp"
#include "blasso/measure.hpp"

namespace blasso {

// Data, regularization and kernel context of the objective
//   J_W(mu_w) = 1/2 [C + sum_jl w_j w_l K(x_j, x_l) - 2 sum_j w_j witness(x_j)] + kappa sum_j w_j.
// The data-only constant C is computed on first request and cached (O(n^2) for
// d > 1, binned for d == 1). The solver never needs it and works with J_W - C/2.
class ObjectiveContext {
public:
    ObjectiveContext(SampleMatrix samples, double kappa, KernelContext ctx);

    const SampleMatrix& samples() const { return samples_; }
    double kappa() const { return kappa_; }
    const KernelContext& kernel() const { return ctx_; }
    Eigen::Index n() const { return samples_.rows(); }

    double data_constant() const;
    const WitnessEvaluator& witness() const { return *witness_; }

private:
    struct ConstantCache;
    SampleMatrix samples_;
    double kappa_;
    KernelContext ctx_;
    std::shared_ptr<ConstantCache> cache_;
    std::shared_ptr<const WitnessEvaluator> witness_;
};

struct ObjectiveTerms {
    double quadratic = 0.0;  // sum_jl w_j w_l K(x_j, x_l)
    double linear = 0.0;     // sum_j w_j witness(x_j)
    double tv = 0.0;

    // J_W - C/2 and fidelity - C/2.
    double shifted_fidelity() const { return 0.5 * quadratic - linear; }
    double shifted_objective(double kappa) const { return shifted_fidelity() + kappa * tv; }
};

ObjectiveTerms objective_terms(const DiscreteMeasure& mu_w, const ObjectiveContext& octx);

double objective(const DiscreteMeasure& mu_w, const ObjectiveContext& octx);
double objective_shifted(const DiscreteMeasure& mu_w, const ObjectiveContext& octx);

struct ObjectiveGradient {
    std::vector<double> weight;              // dJ/dw_j
    std::vector<Eigen::VectorXd> position;   // dJ/dx_j, (t, u) layout
};

ObjectiveGradient objective_gradient(const DiscreteMeasure& mu_w, const ObjectiveContext& octx);

struct SolverConfig {
    int max_particles = 6;
    int iterations = 3000;
    double eta_w = 1.0;           // initial weight step
    double eta_x = 1.0;           // initial position step
    double step_growth = 1.5;     // multiplier after an accepted step
    double step_max = 1e4;
    double merge_radius = 0.05 * 0.3025;  // semi-distance
    double prune_fraction = 1e-6;          // prune weights below this fraction of the TV norm
    int period = 25;              // iterations between prune/merge passes
    double tolerance = 1e-13;     // relative objective decrease
    int patience = 20;            // consecutive accepted steps below tolerance before stopping
    int insertion_candidates = 16;  // sample points probed for new atoms each period; 0 disables
    std::uint64_t seed = 1;
};

struct TraceRow {
    int iteration = 0;
    double objective_shifted = 0.0;
    double fidelity_shifted = 0.0;
    double tv = 0.0;
    double eta_w = 0.0;
    double eta_x = 0.0;
    int atoms = 0;
    std::string event;  // "init", "step", "prune_merge", "insert"
};

struct SolveResult {
    DiscreteMeasure measure;
    std::vector<TraceRow> trace;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

// K atoms at randomly chosen sample points, u at sqrt(u_min u_max), equal weights
// summing to the W-scale of a unit-mass measure.
DiscreteMeasure initialize_particles(const ObjectiveContext& octx, const SolverConfig& cfg);

SolveResult cpgd_solve(const DiscreteMeasure& init, const ObjectiveContext& octx, const SolverConfig& cfg);

DiscreteMeasure prune_merge(const DiscreteMeasure& mu_w, const SolverConfig& cfg, const KernelContext& ctx);

bool acceptance_check(const DiscreteMeasure& mu_hat_w, const DiscreteMeasure& mu0_w, const ObjectiveContext& octx);

struct RecommendedParameters {
    double rho_n = 0.0;
    double kappa_agnostic = 0.0;
    double kappa_s_dependent = 0.0;  // NaN without an s hint
    double kappa_small_reg = 0.0;
    double tau_prediction = 0.0;
};

RecommendedParameters recommended_parameters(long n, std::optional<int> s_hint, int d, double tau,
                                             const DomainBox& box);

}  // namespace blasso
