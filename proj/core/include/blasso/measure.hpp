#pragma once

#include <Eigen/Core>
#include <vector>

namespace blasso {

// A mixture-component parameter x = (t, u): means t and marginal standard
// deviations u, both of length d. Vector-valued derivatives with respect to a
// location are laid out as (t_1..t_d, u_1..u_d).
struct Location {
    Eigen::VectorXd t;
    Eigen::VectorXd u;

    Location() = default;
    Location(Eigen::VectorXd t_, Eigen::VectorXd u_) : t(std::move(t_)), u(std::move(u_)) {}
    Location(double t1, double u1) : t(Eigen::VectorXd::Constant(1, t1)), u(Eigen::VectorXd::Constant(1, u1)) {}

    int dim() const { return static_cast<int>(t.size()); }
    Eigen::VectorXd stacked() const;
    static Location from_stacked(const Eigen::VectorXd& v);
};

bool operator==(const Location& a, const Location& b);

struct Atom {
    double weight = 0.0;
    Location x;
};

struct DiscreteMeasure {
    std::vector<Atom> atoms;

    std::size_t size() const { return atoms.size(); }
    bool empty() const { return atoms.empty(); }
    void add(double w, Location x) { atoms.push_back({w, std::move(x)}); }
};

struct DomainBox {
    Eigen::VectorXd t_lo;
    Eigen::VectorXd t_hi;
    double u_min = 1.0;
    double u_max = 1.0;

    int dim() const { return static_cast<int>(t_lo.size()); }
    void validate() const;
    bool contains(const Location& x, double tol = 0.0) const;
    Location clamp(const Location& x) const;

    // Same t-interval [lo, hi] on every coordinate.
    static DomainBox uniform(int d, double lo, double hi, double u_min, double u_max);
};

struct KernelContext {
    int d = 1;
    double tau = 1.0;
    DomainBox box;
    // Allows tau > box.u_min; the curvature guarantees of the LPC analysis do not
    // apply in that regime and `guarantees_void()` reports it.
    bool relaxed = false;

    KernelContext() = default;
    KernelContext(DomainBox b, double tau_, bool relaxed_ = false);

    void validate() const;
    bool guarantees_void() const { return tau > box.u_min; }
};

void validate_location(const Location& x, int d);
void validate_measure(const DiscreteMeasure& mu, int d);

double weight_function(const Location& x, double tau);

enum class Direction { to_omega, from_omega };

DiscreteMeasure reparametrize(const DiscreteMeasure& mu, double tau, Direction direction);

double tv_norm(const DiscreteMeasure& mu);

DiscreteMeasure concatenate(const DiscreteMeasure& a, const DiscreteMeasure& b);

double min_pairwise_semidistance(const DiscreteMeasure& mu, const KernelContext& ctx);

}  // namespace blasso
