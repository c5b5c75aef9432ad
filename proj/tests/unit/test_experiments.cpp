#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "blasso/blasso.hpp"
#include "support/oracles.hpp"

using namespace blasso;

namespace {

GroundTruthMixture two_atoms() {
    GroundTruthMixture mix{DiscreteMeasure{}, KernelContext(DomainBox::uniform(1, -100, 100, 0.5, 2.0), 0.5)};
    mix.mu0.add(0.4, Location(-60.0, 1.0));
    mix.mu0.add(0.6, Location(60.0, 1.5));
    return mix;
}

double normal_pdf(double x, double m, double sd) {
    return std::exp(-0.5 * (x - m) * (x - m) / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST(Sampling, MomentsMatchMixture) {
    const GroundTruthMixture mix = two_atoms();
    const SampleMatrix X = sample(mix, 200000, 17);
    const double mean = 0.4 * -60.0 + 0.6 * 60.0;
    const double second = 0.4 * (3600.0 + 1.0) + 0.6 * (3600.0 + 2.25);
    const double var = second - mean * mean;
    EXPECT_NEAR(X.col(0).mean(), mean, 5.0 * std::sqrt(var / 200000.0));
    const double right = (X.col(0).array() > 0.0).cast<double>().mean();
    EXPECT_NEAR(right, 0.6, 5.0 * std::sqrt(0.24 / 200000.0));
    EXPECT_TRUE(sample(mix, 100, 17) == sample(mix, 100, 17));
    EXPECT_FALSE(sample(mix, 100, 17) == sample(mix, 100, 18));
}

TEST(Sampling, ValidationRejectsBadMixtures) {
    GroundTruthMixture mix = two_atoms();
    mix.mu0.atoms[0].weight = 0.5;
    EXPECT_THROW(mix.validate(), Error);
    EXPECT_THROW(sample(two_atoms(), 0, 1), Error);
}

TEST(Metrics, RegionMassesAgainstBruteForce) {
    const GroundTruthMixture mix = two_atoms();
    const KernelContext& ctx = mix.ctx;
    const DiscreteMeasure mu0_w = reparametrize(mix.mu0, ctx.tau, Direction::to_omega);
    DiscreteMeasure hat;
    hat.add(0.8 * mu0_w.atoms[0].weight, Location(-60.05, 1.0));
    hat.add(0.1, Location(-60.0, 1.02));
    hat.add(mu0_w.atoms[1].weight, Location(60.0, 1.5));
    hat.add(0.02, Location(0.0, 1.0));
    const double r = 0.3025;
    const RegionMasses m = region_mass_errors(hat, mu0_w, 0.2, r, ctx);
    ASSERT_EQ(m.errors.size(), 2u);
    double near0 = 0.0;
    for (const auto& a : hat.atoms)
        if (semi_distance(a.x, mu0_w.atoms[0].x, ctx) <= 0.2) near0 += a.weight;
    EXPECT_NEAR(m.errors[0], std::abs(mu0_w.atoms[0].weight - near0), 1e-15);
    EXPECT_NEAR(m.errors[1], 0.0, 1e-15);
    EXPECT_NEAR(m.far_mass, 0.02, 1e-15);
    EXPECT_THROW(region_mass_errors(hat, mu0_w, 0.5, r, ctx), PreconditionError);

    const RegionMasses rn = renormalized_mass_errors(mu0_w, mix.mu0, 0.2, r, ctx);
    EXPECT_NEAR(rn.errors[0], 0.0, 1e-14);
    EXPECT_NEAR(rn.errors[1], 0.0, 1e-14);
}

TEST(Metrics, SparsityCheck) {
    const GroundTruthMixture mix = two_atoms();
    DiscreteMeasure hat;
    hat.add(0.1, Location(-60.0, 1.0));
    hat.add(0.1, Location(60.0, 1.5));
    EXPECT_TRUE(sparsity_check(hat, mix.mu0, 0.3025, mix.ctx).exactly_one_each);
    hat.add(0.1, Location(60.01, 1.5));
    const SparsityReport rep = sparsity_check(hat, mix.mu0, 0.3025, mix.ctx);
    EXPECT_FALSE(rep.exactly_one_each);
    EXPECT_EQ(rep.atoms_per_region[1], 2);
    EXPECT_EQ(rep.far_atoms, 0);
}

TEST(Metrics, GaussianInnerAndPredictionErrorAgainstQuadrature) {
    const Location a(0.3, 0.8), b(-0.4, 1.3);
    const double quad = oracle::integrate([&](double x) { return normal_pdf(x, 0.3, 0.8) * normal_pdf(x, -0.4, 1.3); },
                                          -30.0, 30.0);
    EXPECT_NEAR(gaussian_l2_inner(a, b), quad, 1e-12);

    GroundTruthMixture mix{DiscreteMeasure{}, KernelContext(DomainBox::uniform(1, -10, 10, 0.5, 2.0), 0.5)};
    mix.mu0.add(0.3, Location(-1.0, 0.7));
    mix.mu0.add(0.7, Location(2.0, 1.1));
    DiscreteMeasure hat_w;
    hat_w.add(0.25 * weight_function(Location(-1.1, 0.75), 0.5), Location(-1.1, 0.75));
    hat_w.add(0.7 * weight_function(Location(2.0, 1.1), 0.5), Location(2.0, 1.1));
    auto diff = [&](double x) {
        const double f = 0.25 * normal_pdf(x, -1.1, 0.75) + 0.7 * normal_pdf(x, 2.0, 1.1) - 0.3 * normal_pdf(x, -1.0, 0.7) -
                         0.7 * normal_pdf(x, 2.0, 1.1);
        return f * f;
    };
    EXPECT_NEAR(prediction_error(hat_w, mix.mu0, mix.ctx), oracle::integrate(diff, -30.0, 30.0), 1e-12);
    EXPECT_NEAR(prediction_error(reparametrize(mix.mu0, 0.5, Direction::to_omega), mix.mu0, mix.ctx), 0.0, 1e-15);
}

TEST(Experiments, SeedsAndSlope) {
    EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
    const std::vector<double> x = {10, 100, 1000, 10000};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
    EXPECT_NEAR(log_log_slope(x, y), -0.5, 1e-12);
    EXPECT_TRUE(std::isnan(log_log_slope({10.0}, {1.0})));
    EXPECT_NEAR(log_log_slope({10, 100, 1000}, {1.0, 0.0, 0.01}), -1.0, 1e-12);
}

TEST(Experiments, SweepIsThreadIndependent) {
    const GroundTruthMixture mix = two_atoms();
    SweepConfig cfg;
    cfg.n_grid = {500, 2000};
    cfg.replications = 3;
    cfg.tau_fixed = 0.5;
    cfg.solver.iterations = 400;
    cfg.seed = 77;
    cfg.threads = 1;
    const ExperimentReport one = rate_sweep(mix, cfg);
    cfg.threads = 3;
    const ExperimentReport three = rate_sweep(mix, cfg);
    ASSERT_EQ(one.rows.size(), 6u);
    ASSERT_EQ(three.rows.size(), 6u);
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        EXPECT_EQ(one.rows[i].seed, three.rows[i].seed);
        EXPECT_EQ(one.rows[i].mean_mass_error, three.rows[i].mean_mass_error);
        EXPECT_EQ(one.rows[i].prediction_error, three.rows[i].prediction_error);
        EXPECT_FALSE(one.rows[i].failed) << one.rows[i].error;
    }
    ASSERT_EQ(one.aggregates.size(), 2u);
    EXPECT_EQ(one.aggregates[0].ok, 3);
    EXPECT_TRUE(std::isfinite(one.mass_error_slope[0]));
    EXPECT_EQ(one.mass_error_slope[0], three.mass_error_slope[0]);
}
