#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "blasso/blasso.hpp"
#include "support/oracles.hpp"

using namespace blasso;

namespace {

KernelContext ctx_for(int d, double tau, double lo = -10.0, double hi = 10.0, double u_min = 0.5,
                      double u_max = 2.0) {
    return KernelContext(DomainBox::uniform(d, lo, hi, u_min, u_max), tau);
}

SampleMatrix normal_samples(oracle::Rng& rng, long n, int d, double mean, double sd) {
    SampleMatrix X(n, d);
    for (long i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) X(i, k) = mean + sd * rng.normal();
    return X;
}

DiscreteMeasure random_measure(oracle::Rng& rng, int atoms, int d) {
    DiscreteMeasure mu;
    for (int j = 0; j < atoms; ++j) mu.add(rng.uniform(0.05, 0.6), rng.location(d, 2.0, 0.5, 2.0));
    return mu;
}

}  // namespace

TEST(Objective, EmptyMeasureSingleSample) {
    SampleMatrix X(1, 1);
    X << 0.3;
    const ObjectiveContext octx(X, 0.1, ctx_for(1, 1.0, -10, 10, 1.0, 2.0));
    EXPECT_NEAR(objective(DiscreteMeasure{}, octx), 0.5 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
    EXPECT_NEAR(octx.data_constant(), oracle::fourier_inner_1d({{1.0, 0.3, 0.0}}, {{1.0, 0.3, 0.0}}, 1.0), 1e-9);
}

TEST(Objective, KappaLinearity) {
    oracle::Rng rng(51);
    const SampleMatrix X = normal_samples(rng, 50, 2, 0.0, 1.0);
    const DiscreteMeasure mu = random_measure(rng, 3, 2);
    const ObjectiveContext a(X, 0.05, ctx_for(2, 0.4)), b(X, 0.10, ctx_for(2, 0.4));
    EXPECT_NEAR(objective(mu, b) - objective(mu, a), 0.05 * tv_norm(mu), 1e-14);
    EXPECT_NEAR(objective(mu, a) - objective_shifted(mu, a), 0.5 * a.data_constant(), 1e-14);
}

TEST(Objective, DataConstantMatchesDirectSum) {
    oracle::Rng rng(52);
    for (int d = 1; d <= 2; ++d) {
        const SampleMatrix X = normal_samples(rng, 400, d, 1.0, 3.0);
        const ObjectiveContext octx(X, 0.1, ctx_for(d, 0.3));
        EXPECT_NEAR(octx.data_constant() / oracle::data_constant_direct(X, 0.3), 1.0, 1e-12);
    }
}

TEST(Objective, FidelityMatchesFourierQuadrature) {
    oracle::Rng rng(53);
    const double tau = 0.5;
    for (int rep = 0; rep < 5; ++rep) {
        const SampleMatrix X = normal_samples(rng, 4, 1, 0.0, 1.0);
        const DiscreteMeasure mu = random_measure(rng, 3, 1);
        const ObjectiveContext octx(X, 0.2, ctx_for(1, tau));
        std::vector<oracle::Component> g;
        for (Eigen::Index i = 0; i < X.rows(); ++i) g.push_back({1.0 / X.rows(), X(i, 0), 0.0});
        for (const auto& a : mu.atoms) g.push_back({-a.weight / weight_function(a.x, tau), a.x.t[0], a.x.u[0]});
        const double fidelity = 0.5 * oracle::fourier_inner_1d(g, g, tau);
        const double expected = fidelity + 0.2 * tv_norm(mu);
        EXPECT_NEAR(objective(mu, octx) / expected, 1.0, 1e-6);
    }
}

TEST(Objective, GradientMatchesFiniteDifferences) {
    oracle::Rng rng(54);
    for (int d = 1; d <= 2; ++d) {
        const SampleMatrix X = normal_samples(rng, 200, d, 0.0, 1.5);
        const ObjectiveContext octx(X, 0.05, ctx_for(d, 0.4));
        for (int rep = 0; rep < 20; ++rep) {
            const DiscreteMeasure mu = random_measure(rng, 3, d);
            const ObjectiveGradient G = objective_gradient(mu, octx);
            for (std::size_t j = 0; j < mu.size(); ++j) {
                auto fw = [&](const Eigen::VectorXd& v) {
                    DiscreteMeasure m = mu;
                    m.atoms[j].weight = v[0];
                    return objective(m, octx);
                };
                auto fx = [&](const Eigen::VectorXd& v) {
                    DiscreteMeasure m = mu;
                    m.atoms[j].x = Location::from_stacked(v);
                    return objective(m, octx);
                };
                const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(1, mu.atoms[j].weight);
                EXPECT_NEAR(G.weight[j], oracle::fd_gradient(fw, w0)[0], 1e-6 * (1.0 + std::abs(G.weight[j])));
                EXPECT_LT(oracle::rel_error(G.position[j], oracle::fd_gradient(fx, mu.atoms[j].x.stacked())), 1e-6);
            }
        }
    }
}

TEST(Objective, GradientSpecialCases) {
    oracle::Rng rng(55);
    const SampleMatrix X = normal_samples(rng, 100, 1, 0.0, 1.0);
    const ObjectiveContext octx(X, 0.07, ctx_for(1, 0.4));
    DiscreteMeasure zero;
    zero.add(0.0, Location(0.2, 1.0));
    zero.add(0.0, Location(-0.4, 0.8));
    const ObjectiveGradient G0 = objective_gradient(zero, octx);
    for (std::size_t j = 0; j < zero.size(); ++j)
        EXPECT_NEAR(G0.weight[j], 0.07 - data_witness(zero.atoms[j].x, X, octx.kernel()), 1e-14);

    DiscreteMeasure twin;
    twin.add(0.3, Location(0.2, 1.0));
    twin.add(0.3, Location(0.2, 1.0));
    const ObjectiveGradient G1 = objective_gradient(twin, octx);
    EXPECT_DOUBLE_EQ(G1.weight[0], G1.weight[1]);
    EXPECT_LT((G1.position[0] - G1.position[1]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PruneMerge, Contract) {
    const KernelContext ctx = ctx_for(1, 0.4);
    SolverConfig cfg;
    DiscreteMeasure same;
    same.add(0.2, Location(1.0, 1.0));
    same.add(0.3, Location(1.0, 1.0));
    const DiscreteMeasure m = prune_merge(same, cfg, ctx);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m.atoms[0].weight, 0.5, 1e-15);
    EXPECT_TRUE(m.atoms[0].x == Location(1.0, 1.0));

    DiscreteMeasure zeros;
    zeros.add(0.0, Location(0.0, 1.0));
    zeros.add(0.0, Location(5.0, 1.0));
    EXPECT_TRUE(prune_merge(zeros, cfg, ctx).empty());

    DiscreteMeasure apart;
    apart.add(0.4, Location(-5.0, 1.0));
    apart.add(0.6, Location(5.0, 1.0));
    const DiscreteMeasure a = prune_merge(apart, cfg, ctx);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_TRUE(a.atoms[0].x == apart.atoms[0].x);
    EXPECT_TRUE(a.atoms[1].x == apart.atoms[1].x);
}

TEST(Solver, RecoversSingleAtomAndPassesAcceptance) {
    const KernelContext ctx = ctx_for(1, 0.5, -5.0, 5.0, 0.5, 2.0);
    GroundTruthMixture mix{DiscreteMeasure{}, ctx};
    mix.mu0.add(1.0, Location(0.0, 1.0));
    const SampleMatrix X = sample(mix, 10000, 99);
    const RecommendedParameters p = recommended_parameters(10000, 1, 1, 0.5, ctx.box);
    const ObjectiveContext octx(X, p.kappa_agnostic, ctx);
    SolverConfig cfg;
    cfg.max_particles = 3;
    cfg.seed = 5;
    const SolveResult res = cpgd_solve(initialize_particles(octx, cfg), octx, cfg);

    for (std::size_t i = 1; i < res.trace.size(); ++i)
        if (res.trace[i].event == "step")
            EXPECT_LE(res.trace[i].objective_shifted, res.trace[i - 1].objective_shifted + 1e-15);
    for (const auto& a : res.measure.atoms) {
        EXPECT_GT(a.weight, 0.0);
        EXPECT_TRUE(ctx.box.contains(a.x, 1e-12));
    }

    ASSERT_EQ(res.measure.size(), 1u);
    const Atom& a = res.measure.atoms[0];
    EXPECT_LT(semi_distance(a.x, Location(0.0, 1.0), ctx), 0.1);
    EXPECT_NEAR(a.weight, weight_function(Location(0.0, 1.0), 0.5), 0.1);
    const DiscreteMeasure mu0_w = reparametrize(mix.mu0, 0.5, Direction::to_omega);
    EXPECT_TRUE(acceptance_check(res.measure, mu0_w, octx));
    EXPECT_TRUE(acceptance_check(mu0_w, mu0_w, octx));
    EXPECT_FALSE(acceptance_check(DiscreteMeasure{}, mu0_w, octx));
}

TEST(Solver, FewerParticlesThanAtomsStillReturnsValidMeasure) {
    const KernelContext ctx = ctx_for(1, 0.5, -20.0, 20.0);
    GroundTruthMixture mix{DiscreteMeasure{}, ctx};
    mix.mu0.add(0.5, Location(-10.0, 1.0));
    mix.mu0.add(0.5, Location(10.0, 1.0));
    const SampleMatrix X = sample(mix, 2000, 3);
    const ObjectiveContext octx(X, 0.02, ctx);
    SolverConfig cfg;
    cfg.max_particles = 1;
    cfg.iterations = 300;
    cfg.insertion_candidates = 0;
    const SolveResult res = cpgd_solve(initialize_particles(octx, cfg), octx, cfg);
    EXPECT_LE(res.measure.size(), 1u);
    EXPECT_NO_THROW(validate_measure(res.measure, 1));
    EXPECT_FALSE(res.stop_reason.empty());
}

TEST(Solver, RejectsInitOutsideBox) {
    oracle::Rng rng(56);
    const ObjectiveContext octx(normal_samples(rng, 10, 1, 0.0, 1.0), 0.1, ctx_for(1, 0.4));
    DiscreteMeasure mu;
    mu.add(0.1, Location(50.0, 1.0));
    EXPECT_THROW(cpgd_solve(mu, octx, SolverConfig{}), PreconditionError);
}

TEST(Parameters, PublishedValues) {
    const DomainBox box = DomainBox::uniform(1, -1, 1, 1.0, 2.0);
    const RecommendedParameters p = recommended_parameters(100, 2, 1, 1.0, box);
    EXPECT_NEAR(p.rho_n, std::sqrt(4.0 / (std::sqrt(2.0 * std::numbers::pi) * 100.0)), 1e-15);
    EXPECT_NEAR(p.rho_n, 0.126330, 1e-5);
    EXPECT_NEAR(p.kappa_agnostic, std::sqrt(2.0) / (std::pow(2.0 * std::numbers::pi, 0.25) * 10.0), 1e-15);
    EXPECT_NEAR(p.kappa_agnostic, 0.089326, 1e-5);
    EXPECT_NEAR(p.kappa_s_dependent, p.rho_n / 2.0, 1e-15);
    EXPECT_NEAR(p.kappa_small_reg, p.rho_n * p.rho_n, 1e-15);
    const long n = static_cast<long>(std::round(std::exp(4.0)));
    const RecommendedParameters q = recommended_parameters(n, std::nullopt, 1, 1.0, box);
    EXPECT_NEAR(q.tau_prediction, std::sqrt(2.0) / std::sqrt(std::log(static_cast<double>(n))), 1e-15);
    EXPECT_NEAR(q.tau_prediction, std::sqrt(2.0) / 2.0, 1e-3);
    EXPECT_TRUE(std::isnan(q.kappa_s_dependent));
    EXPECT_THROW(recommended_parameters(1, 1, 1, 1.0, box), PreconditionError);
}
