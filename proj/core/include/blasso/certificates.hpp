#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "blasso/measure.hpp"

namespace blasso {

// Local positive curvature constants with their derived certificate constants.
// All values come from `lpc_constants`; nothing else in the library hard-codes
// them.
struct LpcConstants {
    int d = 1;
    int s = 1;
    double r = 0.0;           // near-region radius
    double eps0_bar = 0.0;    // far-region kernel gap
    double eps2_bar = 0.0;    // near-region curvature
    double delta = 0.0;       // separation Delta(s); 0 when s < 2
    double B00 = 0.0, B10 = 0.0, B11 = 0.0, B02 = 0.0, B12 = 0.0;
    double eps0 = 0.0, eps2 = 0.0;              // global certificate
    double eps0_tilde = 0.0, eps2_tilde = 0.0;  // local certificates
    double cp = 0.0;
    double eps3_tilde = 0.0;
    double delta_tau = 0.0;   // separation threshold on the anchors
};

enum class SeparationFormula {
    automatic,  // one-dimensional variant when d == 1, general otherwise
    general,
    one_dimensional,
};

double separation_delta(int d, int s, SeparationFormula formula = SeparationFormula::automatic);

double separation_threshold(int d, double delta, double r, double tau, double u_min, double u_max);

LpcConstants lpc_constants(int d, int s, double tau, const DomainBox& box,
                           SeparationFormula formula = SeparationFormula::automatic);

struct SeparationReport {
    double min_semidistance = 0.0;
    double delta_tau = 0.0;
    bool satisfied = false;
};

SeparationReport separation_check(const DiscreteMeasure& mu0, const KernelContext& ctx, const LpcConstants& consts);

// Metric-whitened operator norms of the kernel derivatives at a pair, using
// spectral norms of the reduced matrices. `n12` is the sqrt(2d) max-over-axes
// upper bound.
struct OperatorNorms {
    double n00 = 0.0, n10 = 0.0, n01 = 0.0, n11 = 0.0, n02 = 0.0, n12 = 0.0;
};

OperatorNorms sampled_operator_norms(const Location& x, const Location& y, const KernelContext& ctx);

struct CertificateSystem {
    Eigen::MatrixXd upsilon;
    std::vector<Location> anchors;
    KernelContext ctx;

    int s() const { return static_cast<int>(anchors.size()); }
};

CertificateSystem build_upsilon(const std::vector<Location>& anchors, const KernelContext& ctx);

enum class CertificateKind { global, local };
enum class LinearSolver { cholesky, pivoted_lu };

struct CertificateSolution {
    CertificateKind kind = CertificateKind::global;
    int index = -1;  // anchor index for local certificates
    Eigen::VectorXd alpha;
    std::vector<Eigen::VectorXd> beta;
    double p_norm = 0.0;
    double residual = 0.0;  // max-norm of Upsilon [alpha; beta] - rhs
    double condition_estimate = 0.0;
    LinearSolver solver = LinearSolver::cholesky;
};

struct CertificateSet {
    CertificateSolution global;
    std::vector<CertificateSolution> locals;
};

CertificateSet solve_certificates(const CertificateSystem& sys);

double eval_certificate(const CertificateSolution& sol, const CertificateSystem& sys, const Location& x);
Eigen::VectorXd eval_certificate_gradient(const CertificateSolution& sol, const CertificateSystem& sys,
                                          const Location& x);

struct GridSpec {
    int t_res = 400;          // tensor grid points per t axis, over the box
    int u_res = 200;          // tensor grid points per u axis, over the box
    int region_t_res = 400;   // tensor grid per near region bounding box
    int region_u_res = 200;
    int lowdisc_points = 100000;
    int rays = 64;            // geodesic rays per anchor inside its near region
    int ray_steps = 100;
    double slack = 1e-9;      // tolerance absorbed by each clause (linear-solve residual scale)
};

struct ClauseResult {
    std::string name;
    bool pass = true;
    double worst_margin = 0.0;  // min over checked points of (bound - value); >= -slack passes
    Location worst_point;
    long checked = 0;
    long violations = 0;
};

struct NondegeneracyReport {
    SeparationReport separation;
    std::vector<ClauseResult> clauses;
    long points = 0;
    bool norms_pass = true;
    bool all_pass = false;
};

NondegeneracyReport verify_nondegeneracy(const CertificateSet& certs, const CertificateSystem& sys,
                                         const DiscreteMeasure& mu0, const LpcConstants& consts,
                                         const GridSpec& grid);

}  // namespace blasso
