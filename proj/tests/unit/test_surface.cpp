#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "kgbohm/surface.hpp"

using namespace kgbohm;
using namespace fixtures;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Frame in which the two-mode interference pattern is static.
double rest_beta() { return (std::sqrt(26.0) - kSqrt2) / 4.0; }

Hypersurface lab(double t) { return Hypersurface::at_time(t); }

SurfacePatch line_patch(const Hypersurface& s, double lo, double hi, std::size_t cells)
{
    return SurfacePatch(s, {{{lo, hi}, {0, 0}, {0, 0}}}, {{cells, 1, 1}});
}

SurfacePatch two_mode_patch(std::size_t cells) { return line_patch(lab(4.0), 0.8, 1.8, cells); }

SurfacePatch two_mode_initial()
{
    return line_patch(Hypersurface::with_velocity({rest_beta(), 0, 0}, 0.0), -6.0, 1.0, 140);
}

ClassifyControls two_mode_controls()
{
    ClassifyControls c;
    c.margin = 30.0;
    return c;
}

// Band edges of the two-mode function on t = 4: j < 0 where
// cos(theta) < -(p0 + a^2 q0)/(a (p0 + q0)), theta = (p0 - q0) t + 4x.
bool in_negative_band(double x)
{
    const double p0 = kSqrt2, q0 = std::sqrt(26.0), a = 0.5;
    const double theta = (p0 - q0) * 4.0 + 4.0 * x;
    return std::cos(theta) < -(p0 + a * a * q0) / (a * (p0 + q0));
}

}  // namespace

TEST(SurfacePatch, Geometry)
{
    const SurfacePatch p(lab(1.0), {{{0, 1}, {-1, 1}, {2, 2}}}, {{4, 2, 1}});
    EXPECT_EQ(p.cell_count(), 8u);
    EXPECT_DOUBLE_EQ(p.cell_width(0), 0.25);
    EXPECT_DOUBLE_EQ(p.cell_width(1), 1.0);
    EXPECT_DOUBLE_EQ(p.cell_width(2), 1.0);
    EXPECT_DOUBLE_EQ(p.volume(), 2.0);
    EXPECT_TRUE(p.collapsed(2));
    for (std::size_t i = 0; i < p.cell_count(); ++i) {
        EXPECT_EQ(p.flatten(p.unflatten(i)), i);
        EXPECT_EQ(p.locate(p.cell_center(i)), i);
    }
    // Lower edges closed, upper open, last edge closed.
    EXPECT_EQ(p.unflatten(*p.locate(Vec3{0.25, 0, 7}))[0], 1u);
    EXPECT_EQ(p.unflatten(*p.locate(Vec3{1.0, 0, 7}))[0], 3u);
    EXPECT_FALSE(p.locate(Vec3{1.0 + 1e-12, 0, 7}));
    EXPECT_FALSE(p.locate(Vec3{0.5, 1.5, 0}));
    EXPECT_EQ(p.neighbours(p.flatten({1, 0, 0})).size(), 3u);
    EXPECT_EQ(p.refined(2).cells(), (std::array<std::size_t, 3>{8, 4, 1}));
    EXPECT_TRUE(p.same_as(p));
    EXPECT_FALSE(p.same_as(p.refined(2)));
    EXPECT_EQ(p.cell_center_point(0), FourVector(1.0, 0.125, -0.5, 2.0));
}

TEST(SurfacePatch, Validation)
{
    expect_code(ErrorCode::InvalidArgument,
                [] { SurfacePatch(lab(0), {{{1, 0}, {0, 0}, {0, 0}}}, {{4, 1, 1}}); });
    expect_code(ErrorCode::InvalidArgument,
                [] { SurfacePatch(lab(0), {{{0, 1}, {0, 0}, {0, 0}}}, {{1, 1, 1}}); });
    expect_code(ErrorCode::InvalidArgument,
                [] { SurfacePatch(lab(0), {{{0, 1}, {0, 0}, {0, 0}}}, {{4, 2, 1}}); });
}

TEST(SurfaceDensity, Examples)
{
    EXPECT_NEAR(surface_density(plane_wave(), lab(0.0), {0, 0.3, 1, 2}), 2 * kSqrt2, 1e-14);
    // Two-mode point with (p - q).x = pi on t = 0.
    EXPECT_NEAR(surface_density(two_mode(), lab(0.0), {0, std::numbers::pi / 4, 0, 0}),
                -1.135296, 1e-6);
    const Hypersurface moving(FourVector(1.25, 0.75, 0, 0), 0.0);
    EXPECT_NEAR(surface_density(plane_wave(), moving, {0, 0, 0, 0}),
                1.25 * 2 * kSqrt2 - 0.75 * 2, 1e-13);
    EXPECT_NEAR(surface_density(plane_wave(), moving, {0, 0, 0, 0}), 2.03553, 1e-5);
}

TEST(SurfaceDensity, Errors)
{
    expect_code(ErrorCode::NotOnSurface,
                [] { surface_density(plane_wave(), lab(0.0), {1e-8, 0, 0, 0}); });
    EXPECT_NO_THROW(surface_density(plane_wave(), lab(0.0), {5e-10, 0, 0, 0}));
    expect_code(ErrorCode::ArityMismatch, [] {
        surface_density(entangled_pair(), lab(0.0), {0, 0, 0, 0});
    });
    const WaveFunction node =
        make_wavefunction(1.0, 1, {{1.0, {{{1, 0, 0}, +1}}}, {-1.0, {{{5, 0, 0}, +1}}}});
    expect_code(ErrorCode::NodeEncountered,
                [&] { surface_density(node, lab(0.0), {0, 0, 0, 0}); });
}

TEST(FindCrossings, PlaneWave)
{
    IntegratorControls c;
    c.s_max = 3.0 / kSqrt2;  // t from 0 to 3
    const Trajectory t = integrate_trajectory(plane_wave(), {FourVector(0, 0, 0, 0)}, c);
    const std::vector<CrossingEvent> ev = find_crossings(t, lab(2.0));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_NEAR(ev[0].s, kSqrt2, 1e-10);
    EXPECT_EQ(ev[0].direction, +1);
    EXPECT_LT(std::abs(lab(2.0).signed_distance(ev[0].point)), 1e-10);

    c.s_max = 1.0;
    EXPECT_TRUE(find_crossings(integrate_trajectory(plane_wave(), {FourVector(0, 0, 0, 0)}, c),
                               lab(2.0))
                    .empty());
}

TEST(FindCrossings, EndingOnTheSurface)
{
    IntegratorControls c;
    const StopSurface stop{lab(2.0), 0};
    const Trajectory t =
        integrate_trajectory(plane_wave(), {FourVector(0, 0, 0, 0)}, c, std::span(&stop, 1));
    const std::vector<CrossingEvent> ev = find_crossings(t, lab(2.0));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_NEAR(ev[0].s, kSqrt2, 1e-10);
}

TEST(FindCrossings, ThreeCrossingsThroughBand)
{
    // Scan starts on t = 0 for a worldline whose t(s) turns twice, then put
    // the surface between the turning times.
    IntegratorControls c;
    c.s_max = 6.0;
    c.max_step = 0.01;
    bool found = false;
    for (int k = 0; k < 60 && !found; ++k) {
        const double x0 = -0.6 + 0.05 * k;
        const Trajectory t = integrate_trajectory(two_mode(), {FourVector(0, x0, 0, 0)}, c);
        double t_max = 0, t_min = 0;
        std::size_t turns = 0;
        for (std::size_t i = 1; i + 1 < t.samples.size() && turns < 2; ++i) {
            const double a = t.samples[i - 1].cfg[0][0], b = t.samples[i].cfg[0][0],
                         d = t.samples[i + 1].cfg[0][0];
            if (turns == 0 && b > a && b > d) {
                t_max = b;
                ++turns;
            } else if (turns == 1 && b < a && b < d) {
                t_min = b;
                ++turns;
            }
        }
        if (turns < 2 || t_max - t_min < 1e-3) {
            continue;
        }
        const Hypersurface s = lab(0.5 * (t_max + t_min));
        std::size_t sign_changes = 0;
        for (std::size_t i = 1; i < t.samples.size(); ++i) {
            sign_changes += (s.signed_distance(t.samples[i - 1].cfg[0]) > 0) !=
                            (s.signed_distance(t.samples[i].cfg[0]) > 0);
        }
        if (sign_changes < 3) {
            continue;
        }
        found = true;
        const std::vector<CrossingEvent> ev = find_crossings(t, s);
        ASSERT_EQ(ev.size(), sign_changes);
        int downs = 0;
        for (std::size_t k = 0; k < ev.size(); ++k) {
            EXPECT_LT(std::abs(s.signed_distance(ev[k].point)), 1e-10);
            const double j = surface_density(two_mode(), s, ev[k].point);
            EXPECT_EQ(j > 0 ? 1 : -1, ev[k].direction);
            if (k > 0) {
                EXPECT_LT(ev[k - 1].s, ev[k].s);
                EXPECT_EQ(ev[k].direction, -ev[k - 1].direction);
            }
            downs += ev[k].direction < 0;
        }
        EXPECT_GE(downs, 1);
    }
    EXPECT_TRUE(found);
}

TEST(Classify, PlaneWaveAllPrime)
{
    const SurfacePatch patch = line_patch(lab(2.0), 0, 1, 10);
    const SurfacePatch initial = line_patch(lab(0.0), -2, 2, 10);
    const SurfacePartition part = classify_patch(plane_wave(), patch, initial);
    EXPECT_EQ(part.count(CellLabel::SigmaPrime), 10u);
    EXPECT_TRUE(part.pairings.empty());
    const MeasurableDistribution m = measurable_distribution(part);
    for (double r : m.rho) {
        EXPECT_NEAR(r, 2 * kSqrt2, 1e-13);
    }
    EXPECT_NEAR(m.integral, 2 * kSqrt2 * patch.volume(), 1e-12);
}

TEST(Classify, TwoModeBands)
{
    const SurfacePatch patch = two_mode_patch(100);
    const SurfacePartition part = classify_patch(two_mode(), patch, two_mode_initial(),
                                                 two_mode_controls());
    EXPECT_EQ(part.count(CellLabel::Unresolved), 0u);
    EXPECT_EQ(part.partners_outside, 0u);
    for (std::size_t i = 0; i < patch.cell_count(); ++i) {
        const double x = patch.cell_center(i)[0];
        EXPECT_EQ(part.labels[i] == CellLabel::SigmaMinus, in_negative_band(x)) << x;
        if (part.labels[i] == CellLabel::SigmaMinus) {
            EXPECT_LT(part.density[i], 0.0);
        }
    }
    EXPECT_GT(part.count(CellLabel::SigmaPlus), 0u);
    EXPECT_EQ(part.pairings.size(), part.count(CellLabel::SigmaMinus));

    // The plus band sits directly below the minus band in x.
    std::size_t first_minus = patch.cell_count(), last_plus = 0;
    for (std::size_t i = 0; i < patch.cell_count(); ++i) {
        if (part.labels[i] == CellLabel::SigmaMinus) {
            first_minus = std::min(first_minus, i);
        }
        if (part.labels[i] == CellLabel::SigmaPlus) {
            last_plus = std::max(last_plus, i);
        }
    }
    EXPECT_EQ(last_plus + 1, first_minus);

    const MeasurableDistribution m = measurable_distribution(part);
    for (std::size_t i = 0; i < patch.cell_count(); ++i) {
        if (part.labels[i] == CellLabel::SigmaPrime) {
            EXPECT_EQ(m.rho[i], part.density[i]);
        } else {
            EXPECT_EQ(m.rho[i], 0.0);
        }
    }
}

TEST(Classify, AgreesWithDenseSweepFromInitialSurface)
{
    // Independent oracle: run worldlines forward from a dense line of starts on
    // the initial surface; their first crossings of the patch surface cover
    // Sigma' and skip the union of the paired bands.
    const SurfacePatch patch = two_mode_patch(100);
    const SurfacePartition part = classify_patch(two_mode(), patch, two_mode_initial(),
                                                 two_mode_controls());
    const Hypersurface s0 = two_mode_initial().sigma();
    const StopSurface stop{patch.sigma(), 0};
    IntegratorControls c;
    c.s_max = 100;
    auto hit = [&](double u) -> std::optional<double> {
        const Trajectory t =
            integrate_trajectory(two_mode(), {s0.embed({u, 0, 0})}, c, std::span(&stop, 1));
        if (t.termination.kind != TerminationKind::ReachedSurface) {
            return std::nullopt;
        }
        return patch.sigma().coordinates(t.termination.crossing->point)[0];
    };
    std::vector<std::pair<double, double>> hits;  // (x, u)
    for (int k = 0; k <= 2000; ++k) {
        const double u = -4.2 + 4.0 * k / 2000.0;
        if (const auto x = hit(u)) {
            hits.emplace_back(*x, u);
        }
    }
    std::sort(hits.begin(), hits.end());
    ASSERT_LT(hits.front().first, 0.8);
    ASSERT_GT(hits.back().first, 1.8);
    std::size_t widest = 1;
    for (std::size_t k = 1; k < hits.size(); ++k) {
        if (hits[k].first - hits[k - 1].first >
            hits[widest].first - hits[widest - 1].first) {
            widest = k;
        }
    }
    // The first crossing jumps across the gap at one start; close in on it.
    auto [gap_lo, u_lo] = hits[widest - 1];
    auto [gap_hi, u_hi] = hits[widest];
    for (int it = 0; it < 40; ++it) {
        const double u = 0.5 * (u_lo + u_hi);
        const double x = *hit(u);
        if (std::abs(x - gap_lo) < std::abs(x - gap_hi)) {
            gap_lo = x;
            u_lo = u;
        } else {
            gap_hi = x;
            u_hi = u;
        }
    }
    // Union of the labeled bands, at cell resolution.
    double band_lo = 1e9, band_hi = -1e9;
    for (std::size_t i = 0; i < patch.cell_count(); ++i) {
        if (part.labels[i] != CellLabel::SigmaPrime) {
            band_lo = std::min(band_lo, patch.cell_center(i)[0] - 0.005);
            band_hi = std::max(band_hi, patch.cell_center(i)[0] + 0.005);
        }
    }
    EXPECT_NEAR(gap_lo, band_lo, 0.011);
    EXPECT_NEAR(gap_hi, band_hi, 0.011);
    // Closed-form edges of the union: the minus band's upper edge and its
    // partner (from the pointwise classification).
    EXPECT_NEAR(gap_hi, 1.478453, 1e-4);
    EXPECT_NEAR(gap_lo, 1.023105, 1e-4);
}

TEST(Classify, InitialDensityNegative)
{
    // Lab t = 0 window over a negative band.
    const SurfacePatch initial = line_patch(lab(0.0), 0.5, 1.0, 10);
    expect_code(ErrorCode::InitialDensityNegative, [&] {
        classify_patch(two_mode(), two_mode_patch(20), initial, two_mode_controls());
    });
}

TEST(Classify, Preconditions)
{
    const SurfacePatch patch = line_patch(lab(2.0), 0, 1, 10);
    expect_code(ErrorCode::InvalidArgument, [&] {
        classify_patch(plane_wave(), patch, line_patch(lab(3.0), 0, 1, 10));
    });
    const WaveFunction pair = WaveFunction::product(plane_wave(), plane_wave());
    expect_code(ErrorCode::ArityMismatch,
                [&] { classify_patch(pair, patch, line_patch(lab(0.0), 0, 1, 10)); });
}

TEST(Classify, PartnerConsistency)
{
    const SurfacePatch patch = two_mode_patch(100);
    const SurfacePartition part = classify_patch(two_mode(), patch, two_mode_initial(),
                                                 two_mode_controls());
    IntegratorControls c;
    c.direction = -1;
    c.s_max = 100;
    const StopSurface stop{patch.sigma(), 0};
    ASSERT_FALSE(part.pairings.empty());
    for (const Pairing& p : part.pairings) {
        const Trajectory back =
            integrate_trajectory(two_mode(), {p.plus_point}, c, std::span(&stop, 1));
        ASSERT_EQ(back.termination.kind, TerminationKind::ReachedSurface);
        EXPECT_LT((back.termination.crossing->point - p.minus_point).euclidean_norm(),
                  patch.cell_width(0));
        ASSERT_TRUE(p.connector);
        EXPECT_EQ(part.connectors[*p.connector].termination.crossing->point, p.plus_point);
    }
}

TEST(Classify, FluxBalanceConverges)
{
    std::vector<double> defects;
    for (std::size_t cells : {50u, 100u, 200u}) {
        const SurfacePartition part = classify_patch(two_mode(), two_mode_patch(cells),
                                                     two_mode_initial(), two_mode_controls());
        ASSERT_TRUE(part.refined_fluxes);
        // The minus band carries flux -0.2254433 (closed form).
        EXPECT_NEAR(part.refined_fluxes->minus, -0.2254433228, 1e-3);
        defects.push_back(std::abs(part.refined_fluxes->balance()));
    }
    EXPECT_LT(defects[1], 1e-3);
    EXPECT_LE(defects[1], defects[0] / 2);
    EXPECT_LE(defects[2], defects[1] / 2);
}

TEST(Classify, PrimeFluxMatchesInitialWindow)
{
    // The net flux through the patch equals the flux through the stretch of
    // the initial surface between the back-traces of the patch ends.
    const SurfacePatch patch = two_mode_patch(200);
    const SurfacePartition part = classify_patch(two_mode(), patch, two_mode_initial(),
                                                 two_mode_controls());
    const Hypersurface s0 = two_mode_initial().sigma();
    IntegratorControls c;
    c.direction = -1;
    c.s_max = 100;
    const StopSurface stop{s0, 0};
    auto foot = [&](double x) {
        const Trajectory t = integrate_trajectory(two_mode(), {patch.sigma().embed({x, 0, 0})}, c,
                                                  std::span(&stop, 1));
        EXPECT_EQ(t.termination.kind, TerminationKind::ReachedSurface);
        return s0.coordinates(t.termination.crossing->point)[0];
    };
    const double ua = foot(0.8), ub = foot(1.8);
    const int n = 20000;
    double z = 0;
    for (int k = 0; k < n; ++k) {
        const double u = ua + (ub - ua) * (k + 0.5) / n;
        z += surface_density(two_mode(), s0, s0.embed({u, 0, 0})) * (ub - ua) / n;
    }
    const RegionFluxes& f = *part.refined_fluxes;
    EXPECT_NEAR(f.prime + f.plus + f.minus, z, 1e-3 * z);
    EXPECT_NEAR(f.prime, z, 1e-3 * z);
}

TEST(Classify, LabelsStabiliseUnderRefinement)
{
    std::vector<double> mismatch;
    std::vector<SurfacePartition> parts;
    for (std::size_t cells : {25u, 50u, 100u, 200u}) {
        parts.push_back(classify_patch(two_mode(), two_mode_patch(cells), two_mode_initial(),
                                       two_mode_controls()));
    }
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        const SurfacePartition& coarse = parts[k];
        const SurfacePartition& fine = parts[k + 1];
        std::size_t differ = 0;
        for (std::size_t i = 0; i < fine.labels.size(); ++i) {
            const std::size_t c = *coarse.patch.locate(fine.patch.cell_center(i));
            differ += fine.labels[i] != coarse.labels[c];
        }
        mismatch.push_back(static_cast<double>(differ) / fine.labels.size());
    }
    EXPECT_GE(mismatch[0], mismatch[1]);
    EXPECT_GE(mismatch[1], mismatch[2]);
    EXPECT_GT(mismatch[0], mismatch[2]);
    EXPECT_LT(mismatch[2], 0.02);
}

TEST(MeasurableDistribution, ArtificialPartitions)
{
    const SurfacePatch patch = line_patch(lab(0.0), 0, 1, 4);
    SurfacePartition part{patch,        std::vector<CellLabel>(4, CellLabel::SigmaMinus),
                          {-1, -2, -3, -4}, std::vector<UnresolvedReason>(4),
                          {},           {},
                          0.0,          1e-3,
                          0,            {},
                          std::nullopt, 0};
    const MeasurableDistribution m = measurable_distribution(part);
    EXPECT_EQ(m.integral, 0.0);
    for (double r : m.rho) {
        EXPECT_EQ(r, 0.0);
    }
    part.labels[0] = CellLabel::Unresolved;
    expect_code(ErrorCode::TooManyUnresolved, [&] { measurable_distribution(part); });
    part.max_unresolved_fraction = 0.25;
    EXPECT_NO_THROW(measurable_distribution(part));
}
