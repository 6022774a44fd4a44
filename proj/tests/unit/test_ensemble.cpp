#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "kgbohm/ensemble.hpp"

using namespace kgbohm;
using namespace fixtures;

namespace {

const double kSqrt2 = std::sqrt(2.0);

SurfacePatch line_patch(const Hypersurface& s, double lo, double hi, std::size_t cells)
{
    return SurfacePatch(s, {{{lo, hi}, {0, 0}, {0, 0}}}, {{cells, 1, 1}});
}

// Closed-form antiderivative of the two-mode density on t = 0:
// 2 [p0 + a^2 q0 + a (p0 + q0) cos 4x].
double two_mode_flux(double lo, double hi)
{
    const double p0 = kSqrt2, q0 = std::sqrt(26.0), a = 0.5;
    auto F = [&](double x) {
        return 2.0 * ((p0 + a * a * q0) * x + a * (p0 + q0) * std::sin(4.0 * x) / 4.0);
    };
    return F(hi) - F(lo);
}

}  // namespace

TEST(Normalize, PlaneWave)
{
    const InitialDistribution d =
        normalize_on_surface(plane_wave(), line_patch(Hypersurface::at_time(0), 0, 1, 10));
    EXPECT_NEAR(d.normalization, 2 * kSqrt2, 1e-13);
    EXPECT_TRUE(d.tail_flag);
    EXPECT_NEAR(d.density_bound, 1.01 * 2 * kSqrt2, 1e-12);
}

TEST(Normalize, TwoModeClosedForm)
{
    const InitialDistribution d =
        normalize_on_surface(two_mode(), line_patch(Hypersurface::at_time(0), 1.0, 2.1, 200));
    EXPECT_NEAR(d.normalization, two_mode_flux(1.0, 2.1), 1e-8);
}

TEST(Normalize, NegativeBand)
{
    expect_code(ErrorCode::InitialDensityNegative, [] {
        normalize_on_surface(two_mode(), line_patch(Hypersurface::at_time(0), 0.5, 1.0, 20));
    });
    expect_code(ErrorCode::ArityMismatch, [] {
        normalize_on_surface(entangled_pair(), line_patch(Hypersurface::at_time(0), 0, 1, 4));
    });
}

TEST(Normalize, TailFlagOnDecayingDensity)
{
    // A packet whose density is negligible at the edges of the wide window.
    // (Further out its j0 turns slightly negative.)
    GaussianPacketSpec spec;
    spec.center = {0.2, 0, 0};
    spec.width = {0.5, 0, 0};
    const WaveFunction psi =
        make_wavefunction(1.0, 1, gaussian_packet_terms(spec, 1));
    const InitialDistribution wide =
        normalize_on_surface(psi, line_patch(Hypersurface::at_time(0), -5.5, 5.5, 110));
    EXPECT_FALSE(wide.tail_flag);
    const InitialDistribution narrow =
        normalize_on_surface(psi, line_patch(Hypersurface::at_time(0), -1, 1, 20));
    EXPECT_TRUE(narrow.tail_flag);
}

TEST(Sample, Determinism)
{
    const InitialDistribution d =
        normalize_on_surface(two_mode(), line_patch(Hypersurface::at_time(0), 1.0, 2.1, 50));
    const EnsembleSamples a = sample_initial(d, 500, 17, InitialLaw::Current, 1);
    const EnsembleSamples b = sample_initial(d, 500, 17, InitialLaw::Current, 3);
    EXPECT_EQ(a.points, b.points);
    EXPECT_NE(a.points, sample_initial(d, 500, 18).points);
    // Prefix property: sample i depends on (seed, i) only.
    const EnsembleSamples c = sample_initial(d, 100, 17);
    EXPECT_TRUE(std::equal(c.points.begin(), c.points.end(), a.points.begin()));
}

TEST(Sample, SinglePointInsideWindow)
{
    const SurfacePatch p = line_patch(Hypersurface::at_time(0), 0, 1, 10);
    const EnsembleSamples s = sample_initial(normalize_on_surface(plane_wave(), p), 1, 3);
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_TRUE(p.locate(s.points[0]));
    EXPECT_EQ(s.points[0][0], 0.0);
}

TEST(Sample, UniformCountsWithinBinomialBounds)
{
    const SurfacePatch p = line_patch(Hypersurface::at_time(0), 0, 1, 10);
    const std::size_t n = 100000;
    const EnsembleSamples s = sample_initial(normalize_on_surface(plane_wave(), p), n, 5);
    std::vector<std::size_t> counts(10, 0);
    for (const FourVector& x : s.points) {
        ++counts[*p.locate(x)];
    }
    const double sigma = std::sqrt(n * 0.1 * 0.9);
    for (std::size_t c : counts) {
        EXPECT_LT(std::abs(static_cast<double>(c) - n / 10.0), 4 * sigma);
    }
}

TEST(Sample, FollowsNonuniformDensity)
{
    // Two-mode density on a positive window: cell frequencies against the
    // closed-form cell integrals.
    const SurfacePatch p = line_patch(Hypersurface::at_time(0), 1.0, 2.1, 11);
    const InitialDistribution d = normalize_on_surface(two_mode(), p);
    const std::size_t n = 200000;
    const EnsembleSamples s = sample_initial(d, n, 9);
    std::vector<std::size_t> counts(11, 0);
    for (const FourVector& x : s.points) {
        ++counts[*p.locate(x)];
    }
    const double z = two_mode_flux(1.0, 2.1);
    for (std::size_t i = 0; i < 11; ++i) {
        const double lo = 1.0 + 0.1 * i;
        const double prob = two_mode_flux(lo, lo + 0.1) / z;
        const double sigma = std::sqrt(n * prob * (1 - prob));
        EXPECT_LT(std::abs(counts[i] - n * prob), 4 * sigma) << i;
    }
}

TEST(Sample, UniformLaw)
{
    const SurfacePatch p = line_patch(Hypersurface::at_time(0), 1.0, 2.1, 11);
    const EnsembleSamples s =
        sample_initial(normalize_on_surface(two_mode(), p), 10, 1, InitialLaw::Uniform);
    EXPECT_EQ(s.law, InitialLaw::Uniform);
    EXPECT_NEAR(s.normalization, 1.1, 1e-15);
    EXPECT_EQ(parse_initial_law("uniform"), InitialLaw::Uniform);
    expect_code(ErrorCode::InvalidArgument, [] { parse_initial_law("flat"); });
}

TEST(Propagate, PlaneWaveTranslation)
{
    const SurfacePatch p0 = line_patch(Hypersurface::at_time(0), 0, 1, 10);
    const SurfacePatch p = line_patch(Hypersurface::at_time(2), kSqrt2, 1 + kSqrt2, 10);
    const EnsembleSamples s = sample_initial(normalize_on_surface(plane_wave(), p0), 2000, 4);
    const EnsembleResult r = propagate_ensemble(plane_wave(), s, p, {});
    ASSERT_EQ(r.crossings.size(), 2000u);
    std::vector<std::size_t> initial(10, 0);
    for (std::size_t i = 0; i < 2000; ++i) {
        const EnsembleCrossing& c = r.crossings[i];
        EXPECT_EQ(c.sample, i);
        EXPECT_NEAR(c.point[1], s.points[i][1] + kSqrt2, 1e-9);
        EXPECT_LT(std::abs(p.sigma().signed_distance(c.point)), 1e-9);
        ++initial[*p0.locate(s.points[i])];
    }
    EXPECT_EQ(r.escaped + r.node_terminated + r.outside_patch, 0u);
    // Up to points on cell edges, the histogram is the translated one.
    std::size_t moved = 0;
    for (std::size_t k = 0; k < 10; ++k) {
        moved += static_cast<std::size_t>(
            std::abs(static_cast<long>(initial[k]) - static_cast<long>(r.histogram[k])));
    }
    EXPECT_LE(moved, 2u);
}

TEST(Propagate, EmptyAndCounts)
{
    const SurfacePatch p = line_patch(Hypersurface::at_time(2), 0, 1, 4);
    const EnsembleResult r = propagate_ensemble(plane_wave(), EnsembleSamples{}, p, {});
    EXPECT_EQ(r.samples, 0u);
    EXPECT_TRUE(r.crossings.empty());
    EXPECT_EQ(r.histogram, std::vector<std::size_t>(4, 0));

    EnsembleSamples s;
    s.points = {FourVector(0, 0, 0, 0), FourVector(0, 5, 0, 0)};
    IntegratorControls short_run;
    short_run.s_max = 0.1;
    const EnsembleResult e = propagate_ensemble(plane_wave(), s, p, short_run);
    EXPECT_EQ(e.escaped, 2u);
    const EnsembleResult f = propagate_ensemble(plane_wave(), s, p, {});
    EXPECT_EQ(f.outside_patch, 2u);
    EXPECT_EQ(f.crossings.size() + f.escaped + f.node_terminated, f.samples);
}

TEST(Propagate, ThreadCountIndependent)
{
    const SurfacePatch p0 = line_patch(Hypersurface::with_velocity({0.92, 0, 0}, 0), -6, 1, 70);
    const SurfacePatch p = line_patch(Hypersurface::at_time(4), 0.8, 1.8, 50);
    const EnsembleSamples s = sample_initial(normalize_on_surface(two_mode(), p0), 200, 2);
    const EnsembleResult a = propagate_ensemble(two_mode(), s, p, {}, 1);
    const EnsembleResult b = propagate_ensemble(two_mode(), s, p, {}, 4);
    ASSERT_EQ(a.crossings.size(), b.crossings.size());
    for (std::size_t i = 0; i < a.crossings.size(); ++i) {
        EXPECT_EQ(a.crossings[i].point, b.crossings[i].point);
        EXPECT_EQ(a.crossings[i].s, b.crossings[i].s);
    }
    EXPECT_EQ(a.histogram, b.histogram);
}

TEST(Compare, PlaneWaveChiSquare)
{
    const SurfacePatch p0 = line_patch(Hypersurface::at_time(0), 0, 1, 10);
    const SurfacePatch p = line_patch(Hypersurface::at_time(2), kSqrt2, 1 + kSqrt2, 10);
    const InitialDistribution d = normalize_on_surface(plane_wave(), p0);
    const EnsembleResult r = propagate_ensemble(plane_wave(), sample_initial(d, 20000, 1), p, {});
    const SurfacePartition part = classify_patch(plane_wave(), p, p0);
    const ComparisonReport rep = compare_to_prediction(r, part);
    EXPECT_EQ(rep.band_hits + rep.buffer_hits, 0u);
    EXPECT_EQ(rep.in_prime, 20000u);
    EXPECT_EQ(rep.dof, 9u);
    EXPECT_GT(rep.p_value, 1e-3);
    for (const CellComparison& c : rep.cells) {
        EXPECT_NEAR(c.expected, 2000.0, 1e-9);
    }
}

TEST(Compare, ChiSquareDetectsWrongDistribution)
{
    // Uniform samples against a nonuniform prediction.
    const SurfacePatch p0 = line_patch(Hypersurface::at_time(0), 1.0, 2.1, 11);
    const InitialDistribution d = normalize_on_surface(two_mode(), p0);
    EnsembleSamples s = sample_initial(d, 20000, 3, InitialLaw::Uniform);
    s.law = InitialLaw::Current;
    s.normalization = d.normalization;
    const SurfacePatch p = line_patch(Hypersurface::at_time(1e-3), 1.0, 2.1, 11);
    const EnsembleResult r = propagate_ensemble(two_mode(), s, p, {});
    const ComparisonReport rep =
        compare_to_prediction(r, classify_patch(two_mode(), p, p0), 0);
    EXPECT_LT(rep.p_value, 1e-6);
}

TEST(Compare, Errors)
{
    const SurfacePatch p0 = line_patch(Hypersurface::at_time(0), 0, 1, 10);
    const SurfacePatch p = line_patch(Hypersurface::at_time(2), 0, 1, 10);
    const EnsembleResult r = propagate_ensemble(plane_wave(), EnsembleSamples{}, p, {});
    const SurfacePartition part = classify_patch(plane_wave(), p.refined(2), p0);
    expect_code(ErrorCode::PatchMismatch, [&] { compare_to_prediction(r, part); });
}

TEST(Compare, BufferAroundBands)
{
    const SurfacePatch p = line_patch(Hypersurface::at_time(0), 0, 1, 8);
    using L = CellLabel;
    SurfacePartition part{p,
                          {L::SigmaPrime, L::SigmaPrime, L::SigmaPlus, L::SigmaPlus, L::SigmaPlus,
                           L::SigmaMinus, L::SigmaPrime, L::SigmaPrime},
                          std::vector<double>(8, 1.0),
                          std::vector<UnresolvedReason>(8),
                          {},
                          {},
                          0.0,
                          1e-3,
                          0,
                          {},
                          std::nullopt,
                          0};
    EnsembleResult r{p, 8, 0, InitialLaw::Current, 1.0, {}, {}, 0, 0, 0};
    r.histogram = {1, 1, 1, 1, 1, 1, 1, 1};
    const ComparisonReport rep = compare_to_prediction(r, part);
    EXPECT_EQ(rep.in_plus, 3u);
    EXPECT_EQ(rep.in_minus, 1u);
    EXPECT_EQ(rep.buffer_hits, 2u);  // cells 2 and 5
    EXPECT_EQ(rep.band_hits, 2u);    // cells 3 and 4
    EXPECT_TRUE(rep.cells[1].buffer);
    EXPECT_FALSE(rep.cells[0].buffer);
    EXPECT_EQ(compare_to_prediction(r, part, 0).band_hits, 4u);
}
