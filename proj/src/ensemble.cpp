#include "kgbohm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "kgbohm/error.hpp"
#include "kgbohm/parallel.hpp"

namespace kgbohm {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::size_t index)
{
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index)));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Nodes and weights of the per-axis composite Simpson rule.
struct AxisRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

AxisRule simpson_axis(const SurfacePatch& patch, std::size_t axis)
{
    AxisRule r;
    const AxisRange b = patch.bounds()[axis];
    if (patch.collapsed(axis)) {
        r.nodes = {b.lo};
        r.weights = {1.0};
        return r;
    }
    const std::size_t intervals = 2 * patch.cells()[axis];
    const double h = (b.hi - b.lo) / static_cast<double>(intervals);
    for (std::size_t k = 0; k <= intervals; ++k) {
        r.nodes.push_back(k == intervals ? b.hi : b.lo + h * static_cast<double>(k));
        const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        r.weights.push_back(w * h / 3.0);
    }
    return r;
}

std::string describe(const Vec3& u)
{
    std::ostringstream os;
    os.precision(10);
    os << "(" << u[0] << ", " << u[1] << ", " << u[2] << ")";
    return os.str();
}

bool is_band(CellLabel l) { return l == CellLabel::SigmaPlus || l == CellLabel::SigmaMinus; }

}  // namespace

std::string_view to_string(InitialLaw law)
{
    switch (law) {
    case InitialLaw::Current:
        return "current";
    case InitialLaw::Uniform:
        return "uniform";
    }
    return "?";
}

InitialLaw parse_initial_law(std::string_view name)
{
    if (name == "current") {
        return InitialLaw::Current;
    }
    if (name == "uniform") {
        return InitialLaw::Uniform;
    }
    fail(ErrorCode::InvalidArgument, "unknown initial law '" + std::string(name) + "'");
}

double InitialDistribution::density(const Vec3& u) const
{
    const Hypersurface& s = patch0.sigma();
    return minkowski_dot(current(psi, {s.embed(u)}, 0), s.normal());
}

InitialDistribution normalize_on_surface(const WaveFunction& psi, const SurfacePatch& patch0,
                                         double tol_rel)
{
    if (psi.particles() != 1) {
        fail(ErrorCode::ArityMismatch, "the initial distribution is single-particle");
    }
    InitialDistribution dist{patch0, psi};
    const std::array<AxisRule, 3> rules{simpson_axis(patch0, 0), simpson_axis(patch0, 1),
                                        simpson_axis(patch0, 2)};
    const std::array<std::size_t, 3> dims{rules[0].nodes.size(), rules[1].nodes.size(),
                                          rules[2].nodes.size()};
    const std::size_t total = dims[0] * dims[1] * dims[2];
    auto split = [&](std::size_t i) {
        return std::array<std::size_t, 3>{i % dims[0], (i / dims[0]) % dims[1],
                                          i / (dims[0] * dims[1])};
    };
    auto coords = [&](const std::array<std::size_t, 3>& k) {
        return Vec3{rules[0].nodes[k[0]], rules[1].nodes[k[1]], rules[2].nodes[k[2]]};
    };

    std::vector<double> j(total);
    parallel_for(total, resolve_threads(0),
                 [&](std::size_t i) { j[i] = dist.density(coords(split(i))); });

    double max_abs = 0.0, max_j = 0.0;
    for (double v : j) {
        max_abs = std::max(max_abs, std::abs(v));
        max_j = std::max(max_j, v);
    }
    for (std::size_t i = 0; i < total; ++i) {
        if (j[i] < -tol_rel * max_abs) {
            std::ostringstream os;
            os.precision(10);
            os << "initial density j.n = " << j[i] << " at surface coordinates "
               << describe(coords(split(i)));
            fail(ErrorCode::InitialDensityNegative, os.str());
        }
    }
    if (!(max_j > 0.0)) {
        fail(ErrorCode::MaxDensityNotFound, "no positive density on the initial window");
    }

    double z = 0.0, boundary = 0.0, interior = 0.0;
    std::size_t n_boundary = 0, n_interior = 0;
    for (std::size_t i = 0; i < total; ++i) {
        const auto k = split(i);
        z += rules[0].weights[k[0]] * rules[1].weights[k[1]] * rules[2].weights[k[2]] * j[i];
        bool edge = false;
        for (std::size_t a = 0; a < 3; ++a) {
            edge = edge || (!patch0.collapsed(a) && (k[a] == 0 || k[a] + 1 == dims[a]));
        }
        if (edge) {
            boundary += j[i];
            ++n_boundary;
        } else {
            interior += j[i];
            ++n_interior;
        }
    }
    dist.normalization = z;
    dist.boundary_mean = n_boundary ? boundary / static_cast<double>(n_boundary) : 0.0;
    dist.interior_mean = n_interior ? interior / static_cast<double>(n_interior) : 0.0;
    dist.tail_flag = dist.boundary_mean > 1e-3 * dist.interior_mean;
    dist.density_bound = 1.01 * max_j;
    return dist;
}

EnsembleSamples sample_initial(const InitialDistribution& dist, std::size_t count,
                               std::uint64_t seed, InitialLaw law, std::size_t threads)
{
    constexpr std::size_t kMaxProposals = 10'000'000;
    EnsembleSamples out;
    out.seed = seed;
    out.law = law;
    out.normalization = law == InitialLaw::Current ? dist.normalization : dist.patch0.volume();
    const SurfacePatch& p = dist.patch0;
    out.points.assign(count, FourVector());
    parallel_for(count, resolve_threads(threads), [&](std::size_t i) {
        std::mt19937_64 rng = stream(seed, i);
        for (std::size_t attempt = 0; attempt < kMaxProposals; ++attempt) {
            Vec3 u;
            for (std::size_t a = 0; a < 3; ++a) {
                const AxisRange b = p.bounds()[a];
                u[a] = p.collapsed(a) ? b.lo : b.lo + (b.hi - b.lo) * uniform01(rng);
            }
            if (law == InitialLaw::Uniform ||
                uniform01(rng) * dist.density_bound < dist.density(u)) {
                out.points[i] = p.sigma().embed(u);
                return;
            }
        }
        fail(ErrorCode::MaxDensityNotFound, "rejection sampling did not accept a proposal");
    });
    return out;
}

EnsembleResult propagate_ensemble(const WaveFunction& psi, const EnsembleSamples& samples,
                                  const SurfacePatch& patch, const IntegratorControls& controls,
                                  std::size_t threads)
{
    if (psi.particles() != 1) {
        fail(ErrorCode::ArityMismatch, "ensembles are single-particle");
    }
    const std::size_t n = samples.points.size();
    const StopSurface stop{patch.sigma(), 0};
    std::vector<Termination> ends(n);
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        ends[i] = integrate_trajectory(psi, {samples.points[i]}, controls, std::span(&stop, 1))
                      .termination;
    });

    EnsembleResult r{patch, n, samples.seed, samples.law, samples.normalization, {}, {}, 0, 0, 0};
    r.histogram.assign(patch.cell_count(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Termination& t = ends[i];
        if (t.kind == TerminationKind::ReachedSurface) {
            EnsembleCrossing c{i, t.crossing->point, t.crossing->s, patch.locate(t.crossing->point)};
            if (c.cell) {
                ++r.histogram[*c.cell];
            } else {
                ++r.outside_patch;
            }
            r.crossings.push_back(c);
        } else if (t.kind == TerminationKind::NodeEncountered) {
            ++r.node_terminated;
        } else {
            ++r.escaped;
        }
    }
    return r;
}

ComparisonReport compare_to_prediction(const EnsembleResult& result, const SurfacePartition& part,
                                       std::size_t buffer_cells, double min_expected)
{
    if (!result.patch.same_as(part.patch)) {
        fail(ErrorCode::PatchMismatch, "ensemble and partition use different patches");
    }
    const SurfacePatch& patch = part.patch;
    const std::size_t n = patch.cell_count();
    ComparisonReport rep;
    rep.samples = result.samples;
    rep.seed = result.seed;
    rep.law = result.law;
    rep.buffer_cells = buffer_cells;
    rep.min_expected = min_expected;

    // A cell is in the buffer if a cell of the other kind (band or not) lies
    // within buffer_cells steps along every non-collapsed axis.
    std::vector<bool> buffer(n, false);
    const long b = static_cast<long>(buffer_cells);
    for (std::size_t i = 0; i < n && b > 0; ++i) {
        const auto ijk = patch.unflatten(i);
        std::array<long, 3> lo{}, hi{};
        for (std::size_t a = 0; a < 3; ++a) {
            const long c = static_cast<long>(ijk[a]);
            const long last = static_cast<long>(patch.cells()[a]) - 1;
            lo[a] = std::max(0L, c - b);
            hi[a] = std::min(last, c + b);
        }
        for (long x = lo[0]; x <= hi[0] && !buffer[i]; ++x) {
            for (long y = lo[1]; y <= hi[1] && !buffer[i]; ++y) {
                for (long z = lo[2]; z <= hi[2] && !buffer[i]; ++z) {
                    const std::size_t k = patch.flatten(
                        {static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                         static_cast<std::size_t>(z)});
                    buffer[i] = is_band(part.labels[k]) != is_band(part.labels[i]);
                }
            }
        }
    }

    const bool predict = result.law == InitialLaw::Current && result.normalization > 0.0;
    const double scale = predict ? static_cast<double>(result.samples) * patch.cell_volume() /
                                       result.normalization
                                 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CellComparison c;
        c.cell = i;
        c.label = part.labels[i];
        c.buffer = buffer[i];
        c.observed = result.histogram[i];
        if (c.label == CellLabel::SigmaPrime) {
            c.expected = scale * part.density[i];
            if (c.expected > 0.0) {
                c.deviation = (static_cast<double>(c.observed) - c.expected) / c.expected;
            }
        }
        switch (c.label) {
        case CellLabel::SigmaPrime:
            rep.in_prime += c.observed;
            break;
        case CellLabel::SigmaPlus:
            rep.in_plus += c.observed;
            break;
        case CellLabel::SigmaMinus:
            rep.in_minus += c.observed;
            break;
        case CellLabel::Unresolved:
            rep.in_unresolved += c.observed;
            break;
        }
        if (is_band(c.label)) {
            (c.buffer ? rep.buffer_hits : rep.band_hits) += c.observed;
        }
        rep.cells.push_back(c);
    }

    if (!predict) {
        return rep;
    }
    std::vector<const CellComparison*> used;
    double sum_obs = 0.0, sum_exp = 0.0;
    for (const CellComparison& c : rep.cells) {
        if (c.label == CellLabel::SigmaPrime && !c.buffer && c.expected >= min_expected) {
            used.push_back(&c);
            sum_obs += static_cast<double>(c.observed);
            sum_exp += c.expected;
        }
    }
    if (used.empty()) {
        return rep;
    }
    for (const CellComparison* c : used) {
        const double d = static_cast<double>(c->observed) - c->expected;
        rep.chi_square += d * d / c->expected;
        if (sum_obs > 0.0) {
            rep.sup_deviation = std::max(
                rep.sup_deviation,
                std::abs(static_cast<double>(c->observed) / sum_obs - c->expected / sum_exp));
        }
    }
    // When every sample is binned in the cells used, their total is fixed.
    const bool closed = static_cast<std::size_t>(sum_obs) == result.samples;
    rep.dof = used.size() - (closed ? 1 : 0);
    if (rep.dof > 0) {
        const boost::math::chi_squared dist(static_cast<double>(rep.dof));
        rep.p_value = boost::math::cdf(boost::math::complement(dist, rep.chi_square));
    }
    return rep;
}

}  // namespace kgbohm
