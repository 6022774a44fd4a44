#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "kgbohm/wavefunction.hpp"

using namespace kgbohm;

using namespace fixtures;

TEST(Mode, OnShell)
{
    const Mode m(1.0, {1, 0, 0});
    EXPECT_NEAR(m.four_momentum()[0], std::sqrt(2.0), 1e-15);
    const Mode q(1.0, {5, 0, 0});
    EXPECT_NEAR(q.four_momentum()[0], std::sqrt(1.0 + 25.0), 1e-14);
    const Mode neg(2.0, {0.3, -0.4, 1.2}, -1);
    EXPECT_LT(neg.four_momentum()[0], 0.0);
    EXPECT_NEAR(minkowski_dot(neg.four_momentum(), neg.four_momentum()), 4.0, 1e-12);
    expect_code(ErrorCode::NonpositiveMass, [] { Mode(0.0, {1, 0, 0}); });
    expect_code(ErrorCode::InvalidArgument, [] { Mode(1.0, {1, 0, 0}, 0); });
}

TEST(MakeWavefunction, Errors)
{
    expect_code(ErrorCode::BadArity,
                [] { make_wavefunction(1.0, 2, {{1.0, {{{1, 0, 0}, +1}}}}); });
    expect_code(ErrorCode::NonpositiveMass,
                [] { make_wavefunction(-1.0, 1, {{1.0, {{{1, 0, 0}, +1}}}}); });
    expect_code(ErrorCode::EmptyExpansion, [] { make_wavefunction(1.0, 1, {}); });
}

TEST(Evaluate, Examples)
{
    const WaveFunction pw = plane_wave();
    const Complex v0 = pw.evaluate({FourVector(0, 0, 0, 0)});
    EXPECT_NEAR(v0.real(), 1.0, 1e-15);
    EXPECT_NEAR(v0.imag(), 0.0, 1e-15);
    // p.x = -2 pi, so exp(-i p.x) = exp(2 pi i) = 1
    const Complex v1 = pw.evaluate({FourVector(0, 2 * std::numbers::pi, 0, 0)});
    EXPECT_NEAR(v1.real(), 1.0, 1e-14);
    EXPECT_NEAR(v1.imag(), 0.0, 1e-14);
    const Complex v2 = two_mode().evaluate({FourVector(0, 0, 0, 0)});
    EXPECT_NEAR(v2.real(), 1.5, 1e-15);
    EXPECT_NEAR(v2.imag(), 0.0, 1e-15);
}

TEST(Evaluate, MatchesDirectExponentials)
{
    std::mt19937_64 rng(3);
    const WaveFunction psi = two_mode();
    const double p0 = std::sqrt(2.0), q0 = std::sqrt(26.0);
    for (int i = 0; i < 50; ++i) {
        const Configuration cfg = random_config(rng, 1);
        const double t = cfg[0][0], x = cfg[0][1];
        const Complex expected = std::exp(Complex(0, -(p0 * t - 1.0 * x))) +
                                 0.5 * std::exp(Complex(0, -(q0 * t - 5.0 * x)));
        EXPECT_LT(std::abs(psi.evaluate(cfg) - expected), 1e-13);
    }
    expect_code(ErrorCode::ArityMismatch, [&] { psi.evaluate({}); });
}

TEST(Gradient, PlaneWaveAtOrigin)
{
    const ComplexFourVector g = plane_wave().gradient({FourVector(0, 0, 0, 0)}, 0);
    EXPECT_NEAR(std::abs(g[0] - Complex(0, -std::sqrt(2.0))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g[1] - Complex(0, -1.0)), 0.0, 1e-15);
    EXPECT_EQ(std::abs(g[2]), 0.0);
    EXPECT_EQ(std::abs(g[3]), 0.0);
    expect_code(ErrorCode::IndexOutOfRange,
                [] { plane_wave().gradient({FourVector(0, 0, 0, 0)}, 2); });
}

TEST(Gradient, MatchesCentralDifferences)
{
    // Contravariant derivative: partial^0 = d/dt, partial^i = -d/dx^i.
    const WaveFunction psi = two_mode();
    const Configuration cfg{FourVector(0.3, -0.7, 0, 0)};
    const double h = 1e-5;
    const ComplexFourVector g = psi.gradient(cfg, 0);
    for (std::size_t mu = 0; mu < 4; ++mu) {
        const Complex fd = (psi.evaluate(shifted(cfg, 0, mu, h)) -
                            psi.evaluate(shifted(cfg, 0, mu, -h))) /
                           (2 * h) * kMetricDiagonal[mu];
        EXPECT_LT(std::abs(fd - g[mu]), 1e-9 * (1 + std::abs(g[mu]))) << mu;
    }

    std::mt19937_64 rng(5);
    const WaveFunction ent = entangled_pair();
    for (int i = 0; i < 20; ++i) {
        const Configuration c = random_config(rng, 2);
        for (std::size_t a = 0; a < 2; ++a) {
            const ComplexFourVector ga = ent.gradient(c, a);
            for (std::size_t mu = 0; mu < 4; ++mu) {
                const Complex fd = (ent.evaluate(shifted(c, a, mu, h)) -
                                    ent.evaluate(shifted(c, a, mu, -h))) /
                                   (2 * h) * kMetricDiagonal[mu];
                EXPECT_LT(std::abs(fd - ga[mu]), 1e-8 * (1 + std::abs(ga[mu])));
            }
        }
    }
}

TEST(SecondDerivative, Examples)
{
    const Complex d00 = plane_wave().second_derivative({FourVector(0, 0, 0, 0)}, 0, 0, 0);
    EXPECT_NEAR(d00.real(), -2.0, 1e-14);
    EXPECT_NEAR(d00.imag(), 0.0, 1e-14);

    std::mt19937_64 rng(7);
    const WaveFunction psi = two_mode();
    for (int i = 0; i < 20; ++i) {
        const Configuration cfg = random_config(rng, 1);
        Complex trace = 0.0;
        for (std::size_t mu = 0; mu < 4; ++mu) {
            trace += kMetricDiagonal[mu] * psi.second_derivative(cfg, 0, mu, mu);
        }
        EXPECT_LT(std::abs(trace + psi.evaluate(cfg)), 1e-12 * 30);
    }
}

TEST(SecondDerivative, MatchesCentralDifferences)
{
    const WaveFunction ent = entangled_pair();
    std::mt19937_64 rng(9);
    const double h = 1e-4;
    for (int i = 0; i < 5; ++i) {
        const Configuration c = random_config(rng, 2);
        for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t mu = 0; mu < 4; ++mu) {
                for (std::size_t nu = 0; nu < 4; ++nu) {
                    const Complex exact = ent.second_derivative(c, a, mu, nu);
                    Complex fd;
                    if (mu == nu) {
                        fd = (ent.evaluate(shifted(c, a, mu, h)) - 2.0 * ent.evaluate(c) +
                              ent.evaluate(shifted(c, a, mu, -h))) /
                             (h * h);
                    } else {
                        fd = (ent.evaluate(shifted(shifted(c, a, mu, h), a, nu, h)) -
                              ent.evaluate(shifted(shifted(c, a, mu, h), a, nu, -h)) -
                              ent.evaluate(shifted(shifted(c, a, mu, -h), a, nu, h)) +
                              ent.evaluate(shifted(shifted(c, a, mu, -h), a, nu, -h))) /
                             (4 * h * h);
                    }
                    fd *= kMetricDiagonal[mu] * kMetricDiagonal[nu];
                    EXPECT_LT(std::abs(fd - exact), 1e-5 * (1 + std::abs(exact)));
                }
            }
        }
    }
}

TEST(Derivatives, MixedAndThirdOrderAgreeWithDifferences)
{
    const WaveFunction ent = entangled_pair();
    std::mt19937_64 rng(13);
    const double h = 1e-5;
    const Configuration c = random_config(rng, 2);
    const Derivatives d = ent.derivatives(c, 3);
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t l = 0; l < 4; ++l) {
                // partial_a^l of first[b] and of box[b]
                const Derivatives up = ent.derivatives(shifted(c, a, l, h), 2);
                const Derivatives dn = ent.derivatives(shifted(c, a, l, -h), 2);
                const double g = kMetricDiagonal[l];
                for (std::size_t mu = 0; mu < 4; ++mu) {
                    const Complex fd = (up.first[b][mu] - dn.first[b][mu]) / (2 * h) * g;
                    EXPECT_LT(std::abs(fd - d.second[a * 2 + b][l * 4 + mu]), 1e-8);
                }
                const Complex fd_box = (up.box[b] - dn.box[b]) / (2 * h) * g;
                EXPECT_LT(std::abs(fd_box - d.grad_box[a * 2 + b][l]), 1e-8);
            }
        }
    }
}

TEST(KgResidual, OnShellVanishes)
{
    std::mt19937_64 rng(17);
    for (const WaveFunction& psi : {plane_wave(), two_mode(), entangled_pair()}) {
        for (int i = 0; i < 100; ++i) {
            const Configuration cfg = random_config(rng, psi.particles(), 20.0);
            for (std::size_t a = 0; a < psi.particles(); ++a) {
                EXPECT_LE(std::abs(psi.kg_residual(cfg, a)),
                          1e-10 * (1 + std::abs(psi.evaluate(cfg))));
            }
        }
    }
}

TEST(KgResidual, OffShellDetected)
{
    const WaveFunction bad(1.0, 1, {{1.0, {Mode::off_shell(1.0, {1, 0, 0}, 1.0)}}});
    EXPECT_GT(std::abs(bad.kg_residual({FourVector(0.1, 0.2, 0, 0)}, 0)), 0.5);
}

TEST(Symmetrize, SingleParticleOnlySetsFlag)
{
    const WaveFunction s = symmetrize(two_mode());
    EXPECT_TRUE(s.symmetrized());
    ASSERT_EQ(s.term_count(), 2u);
    EXPECT_EQ(s.terms()[0].coefficient, Complex(1.0));
    EXPECT_EQ(s.terms()[1].coefficient, Complex(0.5));
    expect_code(ErrorCode::AlreadySymmetrized, [&] { symmetrize(s); });
}

TEST(Symmetrize, TwoParticleTerms)
{
    const Complex c(0.8, -0.2);
    const WaveFunction psi = make_wavefunction(1.0, 2, {{c, {{{1, 0, 0}, +1}, {{0, 2, 0}, +1}}}});
    const WaveFunction s = symmetrize(psi);
    ASSERT_EQ(s.term_count(), 2u);
    EXPECT_EQ(s.terms()[0].coefficient, c / 2.0);
    EXPECT_EQ(s.terms()[1].coefficient, c / 2.0);
    EXPECT_EQ(s.terms()[0].modes[0].momentum(), s.terms()[1].modes[1].momentum());
    EXPECT_EQ(s.terms()[0].modes[1].momentum(), s.terms()[1].modes[0].momentum());
}

TEST(Symmetrize, PermutationInvariance)
{
    const WaveFunction s = entangled_pair();
    std::mt19937_64 rng(19);
    for (int i = 0; i < 50; ++i) {
        const Configuration c = random_config(rng, 2);
        const Configuration swapped{c[1], c[0]};
        EXPECT_LT(std::abs(s.evaluate(c) - s.evaluate(swapped)), 1e-14);
    }
}

TEST(Symmetrize, RefusesTooManyParticles)
{
    std::vector<MomentumSpec> nine(9, MomentumSpec{{0.1, 0, 0}, +1});
    const WaveFunction big = make_wavefunction(1.0, 9, {{1.0, nine}});
    expect_code(ErrorCode::TooManyParticles, [&] { symmetrize(big); });
}

TEST(WaveFunction, Linearity)
{
    const WaveFunction a = two_mode();
    const WaveFunction b = make_wavefunction(1.0, 1, {{Complex(0, 1), {{{0.2, 0.3, -1}, -1}}}});
    const Complex alpha(0.7, 0.1), beta(-1.2, 0.4);
    const WaveFunction c = WaveFunction::combine(alpha, a, beta, b);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 20; ++i) {
        const Configuration cfg = random_config(rng, 1);
        EXPECT_LT(std::abs(c.evaluate(cfg) - (alpha * a.evaluate(cfg) + beta * b.evaluate(cfg))),
                  1e-13);
    }
}

TEST(WaveFunction, BoostEquivariance)
{
    std::mt19937_64 rng(29);
    const LorentzTransform L = LorentzTransform::boost({0.5, -0.2, 0.3});
    for (const WaveFunction& psi : {two_mode(), entangled_pair()}) {
        const WaveFunction boosted = psi.transformed(L);
        for (int i = 0; i < 20; ++i) {
            const Configuration cfg = random_config(rng, psi.particles());
            Configuration mapped;
            for (const FourVector& x : cfg) {
                mapped.push_back(L(x));
            }
            EXPECT_LT(std::abs(boosted.evaluate(mapped) - psi.evaluate(cfg)), 1e-10);
        }
    }
}

TEST(WaveFunction, ProductEvaluatesAsProduct)
{
    const WaveFunction a = two_mode();
    const WaveFunction b = plane_wave();
    const WaveFunction ab = WaveFunction::product(a, b);
    EXPECT_EQ(ab.particles(), 2u);
    std::mt19937_64 rng(31);
    const Configuration c = random_config(rng, 2);
    EXPECT_LT(std::abs(ab.evaluate(c) - a.evaluate({c[0]}) * b.evaluate({c[1]})), 1e-13);
}

TEST(GaussianPacket, GridAndCollapse)
{
    GaussianPacketSpec spec;
    spec.center = {0.5, 0, 0};
    spec.width = {0.1, 0, 0};
    const std::vector<TermSpec> terms = gaussian_packet_terms(spec);
    EXPECT_EQ(terms.size(), 21u);
    double max_weight = 0.0;
    for (const TermSpec& t : terms) {
        max_weight = std::max(max_weight, std::abs(t.coefficient));
        EXPECT_EQ(t.momenta.size(), 1u);
        EXPECT_EQ(t.momenta[0].momentum[1], 0.0);
    }
    EXPECT_NEAR(std::abs(terms[10].coefficient), max_weight, 1e-15);
    EXPECT_NEAR(terms[10].momenta[0].momentum[0], 0.5, 1e-15);
    EXPECT_NEAR(terms.front().momenta[0].momentum[0], 0.5 - 0.4, 1e-14);
    EXPECT_EQ(gaussian_packet_terms(spec, 2).size(), 21u * 21u);
}
