#include "kgbohm/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "hermite.hpp"
#include "kgbohm/error.hpp"
#include "kgbohm/parallel.hpp"

namespace kgbohm {

using detail::Hermite;
using detail::sign_of;

namespace {

constexpr double kOnSurfaceTolerance = 1e-9;
constexpr double kCrossingTolerance = 1e-10;

std::string describe(const Vec3& u)
{
    std::ostringstream os;
    os.precision(10);
    os << "(" << u[0] << ", " << u[1] << ", " << u[2] << ")";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// SurfacePatch

SurfacePatch::SurfacePatch(const Hypersurface& sigma, const std::array<AxisRange, 3>& bounds,
                           const std::array<std::size_t, 3>& cells)
    : sigma_(sigma), bounds_(bounds), cells_(cells)
{
    for (std::size_t k = 0; k < 3; ++k) {
        const AxisRange& r = bounds[k];
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
            fail(ErrorCode::InvalidArgument, "patch bounds must be finite");
        }
        if (r.lo == r.hi) {
            if (cells[k] != 1) {
                fail(ErrorCode::InvalidArgument,
                     "collapsed patch axis " + std::to_string(k) + " must have exactly 1 cell");
            }
        } else if (!(r.lo < r.hi) || cells[k] < 2) {
            fail(ErrorCode::InvalidArgument, "patch axis " + std::to_string(k) +
                                                 " needs lo < hi and at least 2 cells");
        }
    }
}

double SurfacePatch::cell_width(std::size_t axis) const
{
    if (collapsed(axis)) {
        return 1.0;
    }
    return (bounds_[axis].hi - bounds_[axis].lo) / static_cast<double>(cells_[axis]);
}

double SurfacePatch::cell_volume() const { return cell_width(0) * cell_width(1) * cell_width(2); }

double SurfacePatch::volume() const { return cell_volume() * static_cast<double>(cell_count()); }

std::size_t SurfacePatch::flatten(const std::array<std::size_t, 3>& ijk) const
{
    return (ijk[0] * cells_[1] + ijk[1]) * cells_[2] + ijk[2];
}

std::array<std::size_t, 3> SurfacePatch::unflatten(std::size_t index) const
{
    std::array<std::size_t, 3> ijk{};
    ijk[2] = index % cells_[2];
    index /= cells_[2];
    ijk[1] = index % cells_[1];
    ijk[0] = index / cells_[1];
    return ijk;
}

Vec3 SurfacePatch::cell_center(std::size_t index) const
{
    const auto ijk = unflatten(index);
    Vec3 u{};
    for (std::size_t k = 0; k < 3; ++k) {
        u[k] = collapsed(k) ? bounds_[k].lo
                            : bounds_[k].lo + (static_cast<double>(ijk[k]) + 0.5) * cell_width(k);
    }
    return u;
}

bool SurfacePatch::contains(const Vec3& u) const { return locate(u).has_value(); }

std::optional<std::size_t> SurfacePatch::locate(const Vec3& u) const
{
    std::array<std::size_t, 3> ijk{};
    for (std::size_t k = 0; k < 3; ++k) {
        if (collapsed(k)) {
            continue;
        }
        if (!(u[k] >= bounds_[k].lo) || !(u[k] <= bounds_[k].hi)) {
            return std::nullopt;
        }
        const double f = (u[k] - bounds_[k].lo) / cell_width(k);
        ijk[k] = std::min(cells_[k] - 1, static_cast<std::size_t>(std::floor(f)));
    }
    return flatten(ijk);
}

std::optional<std::size_t> SurfacePatch::locate(const FourVector& y) const
{
    return locate(sigma_.coordinates(y));
}

std::vector<std::size_t> SurfacePatch::neighbours(std::size_t index) const
{
    std::vector<std::size_t> out;
    const auto ijk = unflatten(index);
    for (std::size_t k = 0; k < 3; ++k) {
        if (collapsed(k)) {
            continue;
        }
        if (ijk[k] > 0) {
            auto n = ijk;
            --n[k];
            out.push_back(flatten(n));
        }
        if (ijk[k] + 1 < cells_[k]) {
            auto n = ijk;
            ++n[k];
            out.push_back(flatten(n));
        }
    }
    return out;
}

bool SurfacePatch::same_as(const SurfacePatch& other) const
{
    return sigma_.normal() == other.sigma_.normal() && sigma_.offset() == other.sigma_.offset() &&
           bounds_ == other.bounds_ && cells_ == other.cells_;
}

SurfacePatch SurfacePatch::refined(std::size_t factor) const
{
    if (factor == 0) {
        fail(ErrorCode::InvalidArgument, "refinement factor must be positive");
    }
    std::array<std::size_t, 3> cells = cells_;
    for (std::size_t k = 0; k < 3; ++k) {
        if (!collapsed(k)) {
            cells[k] *= factor;
        }
    }
    return SurfacePatch(sigma_, bounds_, cells);
}

// ---------------------------------------------------------------------------

double surface_density(const WaveFunction& psi, const Hypersurface& sigma, const FourVector& y,
                       std::optional<double> node_threshold)
{
    if (psi.particles() != 1) {
        fail(ErrorCode::ArityMismatch, "surface density is defined for one particle");
    }
    const double d = sigma.signed_distance(y);
    if (std::abs(d) > kOnSurfaceTolerance) {
        std::ostringstream os;
        os.precision(6);
        os << "point is " << d << " off the surface";
        fail(ErrorCode::NotOnSurface, os.str());
    }
    const Configuration cfg{y};
    const double density = std::norm(psi.evaluate(cfg));
    const double threshold = node_threshold.value_or(psi.default_node_threshold());
    if (!(density > threshold)) {
        fail(ErrorCode::NodeEncountered, "surface point is at a node of psi");
    }
    return minkowski_dot(current(psi, cfg, 0), sigma.normal());
}

std::vector<CrossingEvent> find_crossings(const Trajectory& traj, const Hypersurface& sigma,
                                          std::size_t a)
{
    std::vector<CrossingEvent> out;
    const auto& samples = traj.samples;
    if (samples.empty()) {
        return out;
    }
    if (a >= samples.front().cfg.size()) {
        fail(ErrorCode::IndexOutOfRange, "particle index out of range");
    }
    const FourVector& n = sigma.normal();
    auto dist = [&](std::size_t k) { return sigma.signed_distance(samples[k].cfg[a]); };
    auto slope = [&](std::size_t k) {
        return samples[k].velocity.empty() ? 0.0 : minkowski_dot(n, samples[k].velocity[a]);
    };
    auto side_of = [](double d) { return std::abs(d) <= kCrossingTolerance ? 0 : sign_of(d); };

    // Position of particle a on the Hermite segment k at unit parameter t.
    auto position = [&](std::size_t k, double t) {
        const TrajectoryPoint& p0 = samples[k];
        const TrajectoryPoint& p1 = samples[k + 1];
        const double h = p1.s - p0.s;
        std::array<double, 4> c{};
        for (std::size_t mu = 0; mu < 4; ++mu) {
            const double v0 = p0.velocity.empty() ? 0.0 : p0.velocity[a][mu];
            const double v1 = p1.velocity.empty() ? 0.0 : p1.velocity[a][mu];
            c[mu] = Hermite{p0.cfg[a][mu], p1.cfg[a][mu], v0, v1, h}.value(t);
        }
        return FourVector(c);
    };
    auto refine = [&](const Hermite& h, double lo, double hi, int side_lo) {
        double t = hi;
        for (int it = 0; it < 200; ++it) {
            t = 0.5 * (lo + hi);
            const double d = h.value(t);
            if (std::abs(d) < kCrossingTolerance) {
                break;
            }
            if (sign_of(d) == side_lo) {
                lo = t;
            } else {
                hi = t;
            }
        }
        return t;
    };
    auto emit = [&](std::size_t k, double t, const Hermite& h) {
        out.push_back({samples[k].s + t * h.h, position(k, t),
                       sign_of(h.slope(t)) * traj.direction, 0});
    };

    std::optional<CrossingEvent> touching;
    int touch_from = 0;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
        const double d0 = dist(k), d1 = dist(k + 1);
        const Hermite h{d0, d1, slope(k), slope(k + 1), samples[k + 1].s - samples[k].s};
        const int s0 = side_of(d0), s1 = side_of(d1);
        if (s0 == 0) {
            if (s1 != 0) {
                if (touching && s1 == -touch_from) {
                    out.push_back(*touching);
                }
                touching.reset();
            }
            continue;
        }
        if (s1 == 0) {
            // Lands on the surface; decided by where it goes next.
            touching = CrossingEvent{samples[k + 1].s, samples[k + 1].cfg[a],
                                     sign_of(slope(k + 1)) * traj.direction, 0};
            touch_from = s0;
            if (touching->direction == 0) {
                touching->direction = -s0 * traj.direction;
            }
            continue;
        }
        if (s1 != s0) {
            emit(k, refine(h, 0.0, 1.0, s0), h);
        } else if (auto t = h.excursion(s0)) {
            emit(k, refine(h, 0.0, *t, s0), h);
            emit(k, refine(h, *t, 1.0, -s0), h);
        }
    }
    if (touching) {
        // The worldline ends on the surface.
        out.push_back(*touching);
    }
    return out;
}

std::string_view to_string(CellLabel label)
{
    switch (label) {
    case CellLabel::SigmaPrime: return "SigmaPrime";
    case CellLabel::SigmaPlus: return "SigmaPlus";
    case CellLabel::SigmaMinus: return "SigmaMinus";
    case CellLabel::Unresolved: return "Unresolved";
    }
    return "unknown";
}

std::string_view to_string(UnresolvedReason reason)
{
    switch (reason) {
    case UnresolvedReason::None: return "None";
    case UnresolvedReason::Escaped: return "Escaped";
    case UnresolvedReason::Node: return "Node";
    case UnresolvedReason::NotPaired: return "NotPaired";
    case UnresolvedReason::Underflow: return "Underflow";
    case UnresolvedReason::Other: return "Other";
    }
    return "unknown";
}

std::size_t SurfacePartition::count(CellLabel label) const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

double SurfacePartition::unresolved_fraction() const
{
    return labels.empty() ? 0.0
                          : static_cast<double>(count(CellLabel::Unresolved)) /
                                static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Classification

namespace {

IntegratorControls connector_controls(const ClassifyControls& controls, int direction)
{
    IntegratorControls c = controls.integrator;
    c.law = VelocityLaw::CurrentForm;
    c.direction = direction;
    c.output_step = 0.0;
    return c;
}

RegionPredicate box_region(const SurfacePatch& patch, double margin)
{
    std::array<double, 3> center{}, half{};
    std::array<bool, 3> bounded{};
    for (std::size_t k = 0; k < 3; ++k) {
        const AxisRange& r = patch.bounds()[k];
        center[k] = 0.5 * (r.lo + r.hi);
        half[k] = 0.5 * (r.hi - r.lo) * margin;
        bounded[k] = !patch.collapsed(k);
    }
    const Hypersurface sigma = patch.sigma();
    return [sigma, center, half, bounded](const Configuration& cfg) {
        const Vec3 u = sigma.coordinates(cfg[0]);
        for (std::size_t k = 0; k < 3; ++k) {
            if (bounded[k] && std::abs(u[k] - center[k]) > half[k]) {
                return false;
            }
        }
        return true;
    };
}

UnresolvedReason reason_for(TerminationKind kind)
{
    switch (kind) {
    case TerminationKind::EscapedRegion: return UnresolvedReason::Escaped;
    case TerminationKind::NodeEncountered: return UnresolvedReason::Node;
    case TerminationKind::StepUnderflow: return UnresolvedReason::Underflow;
    default: return UnresolvedReason::Other;
    }
}

/// Sample points of a window: cell centers plus the Simpson nodes.
std::vector<Vec3> window_samples(const SurfacePatch& patch)
{
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < patch.cell_count(); ++i) {
        out.push_back(patch.cell_center(i));
    }
    std::array<std::vector<double>, 3> axes;
    for (std::size_t k = 0; k < 3; ++k) {
        const AxisRange& r = patch.bounds()[k];
        if (patch.collapsed(k)) {
            axes[k] = {r.lo};
            continue;
        }
        for (std::size_t i = 0; i <= patch.cells()[k]; ++i) {
            axes[k].push_back(r.lo + static_cast<double>(i) * patch.cell_width(k));
        }
    }
    for (double a : axes[0]) {
        for (double b : axes[1]) {
            for (double c : axes[2]) {
                out.push_back({a, b, c});
            }
        }
    }
    return out;
}

}  // namespace

CellLabel classify_point(const WaveFunction& psi, const Hypersurface& sigma,
                         const Hypersurface& initial, const FourVector& y, double tolerance,
                         const ClassifyControls& controls, const RegionPredicate& inside,
                         UnresolvedReason* reason)
{
    auto set_reason = [&](UnresolvedReason r) {
        if (reason) {
            *reason = r;
        }
    };
    set_reason(UnresolvedReason::None);
    double j = 0.0;
    try {
        j = surface_density(psi, sigma, y, controls.integrator.node_threshold);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NodeEncountered) {
            throw;
        }
        set_reason(UnresolvedReason::Node);
        return CellLabel::Unresolved;
    }
    if (j < -tolerance) {
        return CellLabel::SigmaMinus;
    }
    const std::array<StopSurface, 2> stops{StopSurface{sigma, 0}, StopSurface{initial, 0}};
    const Trajectory back =
        integrate_trajectory(psi, {y}, connector_controls(controls, -1), stops, inside);
    if (back.termination.kind == TerminationKind::ReachedSurface) {
        return back.termination.crossing->stop_index == 0 ? CellLabel::SigmaPlus
                                                          : CellLabel::SigmaPrime;
    }
    set_reason(reason_for(back.termination.kind));
    return CellLabel::Unresolved;
}

namespace {

constexpr int kUnknown = -1;

/// Integral of j over the cells with refined label boundaries along `axis`.
/// `pointwise[i]` is set when the label of cell i is the label of its center
/// (cells labeled from a partner point or by default are not).
RegionFluxes refined_fluxes(const WaveFunction& psi, const SurfacePartition& part,
                            const std::vector<char>& pointwise, const Hypersurface& initial,
                            const ClassifyControls& controls, const RegionPredicate& inside,
                            std::size_t axis, std::size_t threads, std::size_t& traces)
{
    const SurfacePatch& patch = part.patch;
    const Hypersurface& sigma = patch.sigma();
    const std::size_t n_axis = patch.cells()[axis];
    const double w = patch.cell_width(axis);
    const double lo_edge = patch.bounds()[axis].lo;
    double transverse = 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
        if (k != axis) {
            transverse *= patch.cell_width(k);
        }
    }

    // One line per transverse cell.
    std::vector<std::size_t> line_starts;
    for (std::size_t i = 0; i < patch.cell_count(); ++i) {
        if (patch.unflatten(i)[axis] == 0) {
            line_starts.push_back(i);
        }
    }

    struct LineResult {
        RegionFluxes flux;
        std::size_t traces = 0;
    };
    std::vector<LineResult> results(line_starts.size());

    parallel_for(line_starts.size(), threads, [&](std::size_t li) {
        LineResult& res = results[li];
        const auto base = patch.unflatten(line_starts[li]);
        auto cell_at = [&](std::size_t i) {
            auto ijk = base;
            ijk[axis] = i;
            return patch.flatten(ijk);
        };
        auto point_at = [&](double coord) {
            Vec3 u = patch.cell_center(line_starts[li]);
            u[axis] = coord;
            return sigma.embed(u);
        };
        auto label_at = [&](double coord) {
            ++res.traces;
            return classify_point(psi, sigma, initial, point_at(coord), part.density_tolerance,
                                  controls, inside);
        };
        auto add = [&](CellLabel label, double value) {
            switch (label) {
            case CellLabel::SigmaPrime: res.flux.prime += value; break;
            case CellLabel::SigmaPlus: res.flux.plus += value; break;
            case CellLabel::SigmaMinus: res.flux.minus += value; break;
            case CellLabel::Unresolved: res.flux.unresolved += value; break;
            }
        };

        // Labels of the cell centers themselves, evaluated where a cell's label
        // was not taken from its center and a label change is nearby.
        std::vector<CellLabel> centre(n_axis);
        for (std::size_t i = 0; i < n_axis; ++i) {
            centre[i] = part.labels[cell_at(i)];
        }
        for (std::size_t i = 0; i < n_axis; ++i) {
            if (pointwise[cell_at(i)]) {
                continue;
            }
            const bool near_change =
                (i > 0 && part.labels[cell_at(i - 1)] != centre[i]) ||
                (i + 1 < n_axis && part.labels[cell_at(i + 1)] != centre[i]);
            if (near_change) {
                centre[i] = label_at(patch.cell_center(cell_at(i))[axis]);
            }
        }

        // Boundaries between runs of equal labels.
        std::vector<double> cuts{lo_edge};
        std::vector<CellLabel> run_labels{centre[0]};
        for (std::size_t i = 0; i + 1 < n_axis; ++i) {
            const CellLabel a = centre[i];
            const CellLabel b = centre[i + 1];
            if (a == b) {
                continue;
            }
            double lo = patch.cell_center(cell_at(i))[axis];
            double hi = patch.cell_center(cell_at(i + 1))[axis];
            if (a != CellLabel::Unresolved && b != CellLabel::Unresolved) {
                while (hi - lo > controls.boundary_tolerance * w) {
                    const double mid = 0.5 * (lo + hi);
                    if (label_at(mid) == a) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            cuts.push_back(0.5 * (lo + hi));
            run_labels.push_back(b);
        }
        cuts.push_back(lo_edge + w * static_cast<double>(n_axis));

        // Midpoint rule on every piece of every cell.
        for (std::size_t r = 0; r + 1 < cuts.size(); ++r) {
            const double a = cuts[r], b = cuts[r + 1];
            const std::size_t first =
                std::min(n_axis - 1, static_cast<std::size_t>(std::floor((a - lo_edge) / w)));
            for (std::size_t i = first; i < n_axis; ++i) {
                const double cell_lo = lo_edge + w * static_cast<double>(i);
                const double cell_hi = cell_lo + w;
                const double pa = std::max(a, cell_lo), pb = std::min(b, cell_hi);
                if (pb <= pa) {
                    if (cell_lo >= b) {
                        break;
                    }
                    continue;
                }
                double j;
                if (pa == cell_lo && pb == cell_hi) {
                    j = part.density[cell_at(i)];
                } else {
                    try {
                        j = surface_density(psi, sigma, point_at(0.5 * (pa + pb)),
                                            controls.integrator.node_threshold);
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::NodeEncountered) {
                            throw;
                        }
                        j = 0.0;
                    }
                }
                add(run_labels[r], j * (pb - pa) * transverse);
            }
        }
    });

    RegionFluxes total;
    for (const LineResult& r : results) {
        total.prime += r.flux.prime;
        total.plus += r.flux.plus;
        total.minus += r.flux.minus;
        total.unresolved += r.flux.unresolved;
        traces += r.traces;
    }
    return total;
}

}  // namespace

SurfacePartition classify_patch(const WaveFunction& psi, const SurfacePatch& patch,
                                const SurfacePatch& initial, const ClassifyControls& controls)
{
    if (psi.particles() != 1) {
        fail(ErrorCode::ArityMismatch, "classification is single-particle");
    }
    if (!(controls.margin >= 1.0) || !(controls.tol_rel >= 0.0) ||
        !(controls.max_unresolved_fraction >= 0.0) || !(controls.boundary_tolerance > 0.0)) {
        fail(ErrorCode::InvalidArgument, "invalid classification controls");
    }
    const Hypersurface& sigma = patch.sigma();
    const Hypersurface& sigma0 = initial.sigma();
    const std::size_t threads = resolve_threads(controls.threads);

    {
        const FourVector c0 = initial.sigma().embed(initial.cell_center(initial.cell_count() / 2));
        const FourVector c1 = sigma.embed(patch.cell_center(patch.cell_count() / 2));
        if (!(sigma.signed_distance(c0) < 0.0) || !(sigma0.signed_distance(c1) > 0.0)) {
            fail(ErrorCode::InvalidArgument,
                 "the initial surface must lie in the past of the classified patch");
        }
    }

    // The initial window must carry a nonnegative density.
    {
        const std::vector<Vec3> pts = window_samples(initial);
        std::vector<double> j0(pts.size());
        parallel_for(pts.size(), threads, [&](std::size_t i) {
            j0[i] = minkowski_dot(current(psi, {sigma0.embed(pts[i])}, 0), sigma0.normal());
        });
        double max_abs = 0.0;
        for (double v : j0) {
            max_abs = std::max(max_abs, std::abs(v));
        }
        const double tol0 = controls.tol_rel * max_abs;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (j0[i] < -tol0) {
                std::ostringstream os;
                os.precision(10);
                os << "initial density j.n = " << j0[i] << " at surface coordinates "
                   << describe(pts[i]);
                fail(ErrorCode::InitialDensityNegative, os.str());
            }
        }
    }

    SurfacePartition part{patch, {}, {}, {}, {}, {}, 0.0, controls.max_unresolved_fraction,
                          0, {}, std::nullopt, 0};
    const std::size_t n = patch.cell_count();
    part.density.assign(n, 0.0);
    part.unresolved_reason.assign(n, UnresolvedReason::None);
    std::vector<int> state(n, kUnknown);
    auto set = [&](std::size_t i, CellLabel l) { state[i] = static_cast<int>(l); };

    std::vector<char> pointwise(n, 0);
    std::vector<char> node(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        try {
            part.density[i] = surface_density(psi, sigma, patch.cell_center_point(i),
                                              controls.integrator.node_threshold);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NodeEncountered) {
                throw;
            }
            node[i] = 1;
        }
    });
    double max_abs = 0.0;
    for (double v : part.density) {
        max_abs = std::max(max_abs, std::abs(v));
    }
    part.density_tolerance = controls.tol_rel * max_abs;

    std::vector<std::size_t> minus_cells;
    for (std::size_t i = 0; i < n; ++i) {
        if (node[i]) {
            set(i, CellLabel::Unresolved);
            part.unresolved_reason[i] = UnresolvedReason::Node;
        } else if (part.density[i] < -part.density_tolerance) {
            set(i, CellLabel::SigmaMinus);
            pointwise[i] = 1;
            minus_cells.push_back(i);
        }
    }

    const RegionPredicate inside = box_region(patch, controls.margin);
    const std::array<StopSurface, 2> stops{StopSurface{sigma, 0}, StopSurface{sigma0, 0}};

    // Connectors from every negative-density cell.
    std::vector<Trajectory> forward(minus_cells.size());
    parallel_for(minus_cells.size(), threads, [&](std::size_t k) {
        forward[k] = integrate_trajectory(psi, {patch.cell_center_point(minus_cells[k])},
                                          connector_controls(controls, +1), stops, inside);
    });
    std::set<std::size_t> seeds;
    for (std::size_t k = 0; k < minus_cells.size(); ++k) {
        const std::size_t cell = minus_cells[k];
        const Termination& term = forward[k].termination;
        const bool paired = term.kind == TerminationKind::ReachedSurface &&
                            term.crossing->stop_index == 0 && term.crossing->direction > 0;
        if (!paired) {
            set(cell, CellLabel::Unresolved);
            part.unresolved_reason[cell] = term.kind == TerminationKind::ReachedSurface
                                               ? UnresolvedReason::NotPaired
                                               : reason_for(term.kind);
            continue;
        }
        Pairing p;
        p.minus_cell = cell;
        p.minus_point = patch.cell_center_point(cell);
        p.plus_point = term.crossing->point;
        p.plus_cell = patch.locate(p.plus_point);
        p.s = term.crossing->s;
        if (controls.keep_connectors) {
            p.connector = part.connectors.size();
            part.connectors.push_back(std::move(forward[k]));
        }
        if (p.plus_cell) {
            seeds.insert(*p.plus_cell);
        } else {
            ++part.partners_outside;
        }
        part.pairings.push_back(p);
    }

    // Flood fill from the partner cells.
    std::set<std::size_t> frontier;
    for (std::size_t cell : seeds) {
        if (state[cell] == kUnknown) {
            set(cell, CellLabel::SigmaPlus);
        }
    }
    for (std::size_t cell : seeds) {
        if (state[cell] != static_cast<int>(CellLabel::SigmaPlus)) {
            continue;
        }
        for (std::size_t nb : patch.neighbours(cell)) {
            if (state[nb] == kUnknown) {
                frontier.insert(nb);
            }
        }
    }
    while (!frontier.empty()) {
        const std::vector<std::size_t> wave(frontier.begin(), frontier.end());
        frontier.clear();
        std::vector<CellLabel> labels(wave.size());
        std::vector<UnresolvedReason> reasons(wave.size());
        parallel_for(wave.size(), threads, [&](std::size_t k) {
            labels[k] = classify_point(psi, sigma, sigma0, patch.cell_center_point(wave[k]),
                                       part.density_tolerance, controls, inside, &reasons[k]);
        });
        part.traces += wave.size();
        for (std::size_t k = 0; k < wave.size(); ++k) {
            const std::size_t cell = wave[k];
            set(cell, labels[k]);
            pointwise[cell] = 1;
            part.unresolved_reason[cell] = reasons[k];
            if (labels[k] != CellLabel::SigmaPlus) {
                continue;
            }
            for (std::size_t nb : patch.neighbours(cell)) {
                if (state[nb] == kUnknown) {
                    frontier.insert(nb);
                }
            }
        }
    }

    part.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        part.labels[i] = state[i] == kUnknown ? CellLabel::SigmaPrime
                                              : static_cast<CellLabel>(state[i]);
    }

    const double vol = patch.cell_volume();
    for (std::size_t i = 0; i < n; ++i) {
        const double f = part.density[i] * vol;
        switch (part.labels[i]) {
        case CellLabel::SigmaPrime: part.cell_fluxes.prime += f; break;
        case CellLabel::SigmaPlus: part.cell_fluxes.plus += f; break;
        case CellLabel::SigmaMinus: part.cell_fluxes.minus += f; break;
        case CellLabel::Unresolved: part.cell_fluxes.unresolved += f; break;
        }
    }

    if (controls.refine_fluxes) {
        std::optional<std::size_t> axis;
        for (std::size_t k = 0; k < 3 && !axis; ++k) {
            if (!patch.collapsed(k)) {
                axis = k;
            }
        }
        part.refined_fluxes = axis ? refined_fluxes(psi, part, pointwise, sigma0, controls, inside, *axis,
                                                    threads, part.traces)
                                   : part.cell_fluxes;
    }
    return part;
}

MeasurableDistribution measurable_distribution(const SurfacePartition& part)
{
    if (part.unresolved_fraction() > part.max_unresolved_fraction) {
        std::ostringstream os;
        os << part.count(CellLabel::Unresolved) << " of " << part.labels.size()
           << " cells are unresolved (limit fraction " << part.max_unresolved_fraction << ")";
        fail(ErrorCode::TooManyUnresolved, os.str());
    }
    MeasurableDistribution out;
    out.rho.assign(part.labels.size(), 0.0);
    const double vol = part.patch.cell_volume();
    for (std::size_t i = 0; i < part.labels.size(); ++i) {
        if (part.labels[i] == CellLabel::SigmaPrime) {
            out.rho[i] = part.density[i];
            out.integral += out.rho[i] * vol;
        }
    }
    return out;
}

}  // namespace kgbohm
