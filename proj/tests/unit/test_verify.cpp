#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "kgbohm/verify.hpp"

using namespace kgbohm;
using namespace fixtures;

namespace {

const CheckReport& find(const std::vector<CheckReport>& rs, const std::string& name)
{
    for (const CheckReport& r : rs) {
        if (r.name == name) {
            return r;
        }
    }
    throw std::runtime_error("no report " + name);
}

std::vector<Configuration> line_starts()
{
    std::vector<Configuration> s;
    for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        s.push_back({FourVector(0, x, 0.1, 0)});
    }
    return s;
}

WaveFunction off_shell_fixture()
{
    return WaveFunction(1.0, 1, {{1.0, {Mode::off_shell(1.0, {1, 0, 0}, 1.0)}}});
}

}  // namespace

TEST(Slope, LogLogFit)
{
    EXPECT_NEAR(loglog_slope({1, 2, 4}, {3, 12, 48}), 2.0, 1e-12);
    EXPECT_NEAR(loglog_slope({0.1, 0.01}, {5e-3, 5e-5}), 2.0, 1e-12);
    EXPECT_TRUE(std::isnan(loglog_slope({1, 2}, {0, 1})));
    expect_code(ErrorCode::InvalidArgument, [] { loglog_slope({1}, {1}); });
}

TEST(IdentitySuite, PlaneWaveExact)
{
    IdentityOptions o;
    o.points = 100;
    const auto rs = run_identity_suite(plane_wave(), "planewave", o);
    EXPECT_TRUE(all_pass(rs));
    EXPECT_LT(find(rs, "kg_residual").value("max_relative_residual"), 1e-10);
    EXPECT_LT(find(rs, "conservation_p1").value("max_normalized_residual"), 1e-10);
    EXPECT_LT(find(rs, "hamilton_jacobi").value("max_relative_residual"), 1e-10);
}

TEST(IdentitySuite, TwoModeOrders)
{
    const auto rs = run_identity_suite(two_mode(), "two-mode", {});
    EXPECT_TRUE(all_pass(rs));
    EXPECT_NEAR(find(rs, "conservation_p1").value("order"), 2.0, 0.1);
    EXPECT_NEAR(find(rs, "continuity").value("order"), 2.0, 0.1);
}

TEST(IdentitySuite, EntangledBothParticles)
{
    IdentityOptions o;
    o.points = 300;
    const auto rs = run_identity_suite(entangled_pair(), "entangled", o);
    EXPECT_TRUE(all_pass(rs));
    EXPECT_NO_THROW(find(rs, "conservation_p2"));
}

TEST(IdentitySuite, OffShellDetected)
{
    IdentityOptions o;
    o.points = 50;
    const auto rs = run_identity_suite(off_shell_fixture(), "offshell", o);
    EXPECT_FALSE(find(rs, "kg_residual").pass);
    EXPECT_FALSE(all_pass(rs));
    // The other checks still run and report.
    EXPECT_EQ(rs.size(), 5u);
}

TEST(CovarianceSuite, TwoMode)
{
    CovarianceOptions o;
    o.starts = line_starts();
    o.integrator.s_max = 5;
    o.integrator.max_step = 0.01;
    const auto rs = run_covariance_suite(two_mode(), "two-mode", o);
    ASSERT_EQ(rs.size(), 4u);
    EXPECT_TRUE(all_pass(rs));
    for (const CheckReport& r : rs) {
        if (r.name.starts_with("boost_trajectories")) {
            EXPECT_LT(r.value("max_curve_distance"), 1e-6);
        }
    }
}

TEST(CovarianceSuite, IdentityBoostIsExact)
{
    CovarianceOptions o;
    o.betas = {0.0};
    o.starts = line_starts();
    const auto rs = run_covariance_suite(two_mode(), "two-mode", o);
    EXPECT_EQ(rs[0].value("max_curve_distance"), 0.0);
    EXPECT_EQ(rs[1].value("max_relative_gap"), 0.0);
}

TEST(CovarianceSuite, PlaneWaveStraightLine)
{
    // The boosted plane wave moves along Lambda p / m.
    const LorentzTransform L = LorentzTransform::boost({0.6, 0, 0});
    const WaveFunction boosted = plane_wave().transformed(L);
    const FourVector p(std::sqrt(2.0), 1, 0, 0);
    IntegratorControls c;
    c.s_max = 3;
    const Trajectory t = integrate_trajectory(boosted, {FourVector(0, 0, 0, 0)}, c);
    EXPECT_LT((t.samples.back().cfg[0] - L(p) * 3.0).euclidean_norm(), 1e-10);
}

TEST(NonrelativisticSuite, OrderTwo)
{
    const WaveFunction unit =
        make_wavefunction(1.0, 1, {{1.0, {{{1, 0, 0}, +1}}}, {0.5, {{{-0.6, 0.5, 0}, +1}}}});
    const CheckReport r = run_nonrelativistic_limit_suite(unit, "nonrel");
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.value("order"), 2.0, 0.05);
    EXPECT_LT(r.value("deviation_eps_0.01"), 1e-3);
    EXPECT_NEAR(r.value("deviation_eps_0.1") / r.value("deviation_eps_0.01"), 100.0, 5.0);
    EXPECT_EQ(r.value("nonpositive_j0_at_smallest_eps"), 0.0);
}

TEST(NonrelativisticSuite, ZeroMomentumExact)
{
    const CheckReport r = run_nonrelativistic_limit_suite(
        make_wavefunction(1.0, 1, {{1.0, {{{0, 0, 0}, +1}}}}), "rest");
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.value("deviation_eps_0.01"), 0.0);
}

TEST(NonrelativisticSuite, ScaleMomenta)
{
    const WaveFunction s = scale_momenta(two_mode(), 0.1);
    EXPECT_NEAR(s.terms()[1].modes[0].momentum()[0], 0.5, 1e-15);
    EXPECT_NEAR(s.terms()[1].modes[0].four_momentum()[0], std::sqrt(1.25), 1e-15);
}

TEST(Census, PlaneWaveAllTimelike)
{
    CensusOptions o;
    o.starts = line_starts();
    o.expect = CensusExpectation::AllTimelike;
    const CheckReport r = run_superluminal_census(plane_wave(), "planewave", o);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.value("timelike_fraction"), 1.0);
}

TEST(Census, TwoModeHasSpacelikeSamples)
{
    CensusOptions o;
    o.starts = line_starts();
    o.integrator.s_max = 20;
    o.expect = CensusExpectation::SomeSpacelike;
    const CheckReport r = run_superluminal_census(two_mode(), "two-mode", o);
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.value("spacelike_fraction"), 0.0);
    EXPECT_LT(r.value("spacelike_fraction"), 1.0);
}

TEST(Census, PerParticleFractions)
{
    CensusOptions o;
    o.starts = {{FourVector(0, 0.3, 0, 0), FourVector(0, -0.4, 0.2, 0)}};
    const CheckReport r = run_superluminal_census(entangled_pair(), "entangled", o);
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(std::isnan(r.value("p2_spacelike_fraction")));
}

TEST(FactorizationSuite, ProductAndEntangled)
{
    FactorizationOptions o;
    o.integrator.s_max = 5;
    o.integrator.rtol = 1e-11;
    o.integrator.atol = 1e-13;
    o.starts = {{FourVector(0, 0.3, 0, 0), FourVector(0, -0.4, 0.2, 0)},
                {FourVector(0, 1, 0, 0), FourVector(0.5, 0, 0, 1)}};
    const auto rs = run_factorization_suite(std::pair{two_mode(), two_mode()}, entangled_pair(),
                                            "factorization", o);
    ASSERT_EQ(rs.size(), 4u);
    EXPECT_TRUE(all_pass(rs));
    EXPECT_LT(find(rs, "product_trajectories").value("max_component_gap"), 1e-8);
    EXPECT_GT(find(rs, "entangled_velocity_dependence").value("max_velocity_change"), 1e-6);
}

TEST(FactorizationSuite, PlaneWaveProductSeparable)
{
    FactorizationOptions o;
    o.starts = {{FourVector(0, 0, 0, 0), FourVector(0, 1, 0, 0)}};
    const auto rs =
        run_factorization_suite(std::pair{plane_wave(), plane_wave()}, std::nullopt, "pw", o);
    EXPECT_TRUE(all_pass(rs));
    EXPECT_LT(find(rs, "product_separable_q").value("max_mixed_derivative"), 1e-9);
}
