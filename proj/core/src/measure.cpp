#include "blasso/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "blasso/error.hpp"
#include "blasso/kernel.hpp"

namespace blasso {

Eigen::VectorXd Location::stacked() const {
    Eigen::VectorXd v(2 * t.size());
    v << t, u;
    return v;
}

Location Location::from_stacked(const Eigen::VectorXd& v) {
    if (v.size() % 2 != 0) throw DimensionError("stacked location must have even length");
    const Eigen::Index d = v.size() / 2;
    return Location(v.head(d), v.tail(d));
}

bool operator==(const Location& a, const Location& b) {
    return a.t.size() == b.t.size() && a.u.size() == b.u.size() && a.t == b.t && a.u == b.u;
}

void DomainBox::validate() const {
    if (t_lo.size() < 1 || t_lo.size() != t_hi.size())
        throw DimensionError("domain box bounds must be non-empty vectors of equal length");
    for (Eigen::Index k = 0; k < t_lo.size(); ++k) {
        if (!std::isfinite(t_lo[k]) || !std::isfinite(t_hi[k]) || !(t_lo[k] < t_hi[k]))
            throw DomainError("domain box requires finite t_lo < t_hi on every coordinate");
    }
    if (!std::isfinite(u_min) || !std::isfinite(u_max) || !(u_min > 0.0) || !(u_min <= u_max))
        throw DomainError("domain box requires 0 < u_min <= u_max");
}

bool DomainBox::contains(const Location& x, double tol) const {
    if (x.dim() != dim()) return false;
    for (int k = 0; k < dim(); ++k) {
        if (x.t[k] < t_lo[k] - tol || x.t[k] > t_hi[k] + tol) return false;
        if (x.u[k] < u_min - tol || x.u[k] > u_max + tol) return false;
    }
    return true;
}

Location DomainBox::clamp(const Location& x) const {
    Location y = x;
    for (int k = 0; k < dim(); ++k) {
        y.t[k] = std::clamp(y.t[k], t_lo[k], t_hi[k]);
        y.u[k] = std::clamp(y.u[k], u_min, u_max);
    }
    return y;
}

DomainBox DomainBox::uniform(int d, double lo, double hi, double u_min, double u_max) {
    DomainBox b;
    b.t_lo = Eigen::VectorXd::Constant(d, lo);
    b.t_hi = Eigen::VectorXd::Constant(d, hi);
    b.u_min = u_min;
    b.u_max = u_max;
    b.validate();
    return b;
}

KernelContext::KernelContext(DomainBox b, double tau_, bool relaxed_)
    : d(b.dim()), tau(tau_), box(std::move(b)), relaxed(relaxed_) {
    validate();
}

void KernelContext::validate() const {
    box.validate();
    if (d != box.dim()) throw DimensionError("kernel context dimension does not match its box");
    if (!std::isfinite(tau) || !(tau > 0.0)) throw DomainError("tau must be positive and finite");
    if (tau > box.u_min && !relaxed)
        throw PreconditionError("tau exceeds u_min; enable relaxed mode to allow it");
}

void validate_location(const Location& x, int d) {
    if (x.t.size() != d || x.u.size() != d)
        throw DimensionError("location dimension " + std::to_string(x.t.size()) + "/" +
                             std::to_string(x.u.size()) + " does not match d=" + std::to_string(d));
    for (int k = 0; k < d; ++k) {
        if (!std::isfinite(x.t[k]) || !std::isfinite(x.u[k])) throw DomainError("non-finite location");
        if (!(x.u[k] > 0.0)) throw DomainError("location standard deviations must be positive");
    }
}

void validate_measure(const DiscreteMeasure& mu, int d) {
    for (const auto& a : mu.atoms) {
        if (!std::isfinite(a.weight) || a.weight < 0.0) throw DomainError("measure weights must be finite and >= 0");
        validate_location(a.x, d);
    }
}

double weight_function(const Location& x, double tau) {
    if (!std::isfinite(tau) || !(tau > 0.0)) throw DomainError("tau must be positive and finite");
    const double c = std::pow(2.0 * std::numbers::pi, -0.25);
    double w = 1.0;
    for (int k = 0; k < x.dim(); ++k) {
        const double u = x.u[k];
        if (!std::isfinite(u) || !std::isfinite(x.t[k])) throw DomainError("non-finite location");
        w *= c * std::pow(2.0 * u * u + tau * tau, -0.25);
    }
    return w;
}

DiscreteMeasure reparametrize(const DiscreteMeasure& mu, double tau, Direction direction) {
    DiscreteMeasure out = mu;
    for (auto& a : out.atoms) {
        const double w = weight_function(a.x, tau);
        a.weight = direction == Direction::to_omega ? a.weight * w : a.weight / w;
    }
    return out;
}

double tv_norm(const DiscreteMeasure& mu) {
    double s = 0.0;
    for (const auto& a : mu.atoms) s += a.weight;
    return s;
}

DiscreteMeasure concatenate(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    DiscreteMeasure out = a;
    out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
    return out;
}

double min_pairwise_semidistance(const DiscreteMeasure& mu, const KernelContext& ctx) {
    if (mu.size() < 2) throw PreconditionError("min_pairwise_semidistance needs at least two atoms");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j)
            best = std::min(best, semi_distance(mu.atoms[i].x, mu.atoms[j].x, ctx));
    return best;
}

}  // namespace blasso
