#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "kgbohm/dynamics.hpp"
#include "kgbohm/spacetime.hpp"
#include "kgbohm/wavefunction.hpp"

namespace kgbohm {

struct AxisRange {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const AxisRange&) const = default;
};

/// Axis-aligned box of cells in the adapted coordinates of a flat surface.
///
/// An axis with lo == hi and a single cell is collapsed: it accepts any
/// coordinate and contributes a factor 1 to cell volumes, so densities on a
/// patch with collapsed axes are per unit transverse length or area.
/// Otherwise an axis needs lo < hi and at least 2 cells. Cells are closed on
/// the lower edge and open on the upper one (the last cell also keeps its
/// upper edge so the patch is closed).
class SurfacePatch {
public:
    SurfacePatch(const Hypersurface& sigma, const std::array<AxisRange, 3>& bounds,
                 const std::array<std::size_t, 3>& cells);

    const Hypersurface& sigma() const { return sigma_; }
    const std::array<AxisRange, 3>& bounds() const { return bounds_; }
    const std::array<std::size_t, 3>& cells() const { return cells_; }
    std::size_t cell_count() const { return cells_[0] * cells_[1] * cells_[2]; }
    bool collapsed(std::size_t axis) const { return bounds_[axis].lo == bounds_[axis].hi; }

    /// Cell width along an axis (1 on a collapsed axis).
    double cell_width(std::size_t axis) const;
    double cell_volume() const;
    double volume() const;

    std::size_t flatten(const std::array<std::size_t, 3>& ijk) const;
    std::array<std::size_t, 3> unflatten(std::size_t index) const;
    Vec3 cell_center(std::size_t index) const;
    FourVector cell_center_point(std::size_t index) const { return sigma_.embed(cell_center(index)); }

    bool contains(const Vec3& u) const;
    std::optional<std::size_t> locate(const Vec3& u) const;
    /// Cell containing the projection of y onto the surface coordinates.
    std::optional<std::size_t> locate(const FourVector& y) const;

    /// Neighbouring cells along the non-collapsed axes.
    std::vector<std::size_t> neighbours(std::size_t index) const;

    /// Same surface, bounds and cell counts (exact comparison).
    bool same_as(const SurfacePatch& other) const;

    /// The same window with every non-collapsed axis subdivided `factor` times.
    SurfacePatch refined(std::size_t factor) const;

private:
    Hypersurface sigma_;
    std::array<AxisRange, 3> bounds_;
    std::array<std::size_t, 3> cells_;
};

/// j.n at a point y of the surface for a single-particle psi. Throws
/// ArityMismatch for n != 1, NotOnSurface if |n.y - tau| > 1e-9 and
/// NodeEncountered at nodes.
double surface_density(const WaveFunction& psi, const Hypersurface& sigma, const FourVector& y,
                       std::optional<double> node_threshold = std::nullopt);

/// Crossings of particle `a`'s worldline with sigma, from sign changes of the
/// signed distance between samples and from interior extrema of the cubic
/// Hermite interpolant. Each crossing is refined by bisection on the
/// interpolant to |distance| < 1e-10; direction is the sign of j.n there,
/// read off the interpolated velocity. Ordered by s.
std::vector<CrossingEvent> find_crossings(const Trajectory& traj, const Hypersurface& sigma,
                                          std::size_t a = 0);

enum class CellLabel { SigmaPrime, SigmaPlus, SigmaMinus, Unresolved };

std::string_view to_string(CellLabel label);

/// A connector from a point of negative density to its partner.
struct Pairing {
    std::size_t minus_cell = 0;
    FourVector minus_point;
    FourVector plus_point;
    /// Cell holding plus_point, if it lies on the patch.
    std::optional<std::size_t> plus_cell;
    /// Affine length of the connector.
    double s = 0.0;
    /// Index into SurfacePartition::connectors when curves are kept.
    std::optional<std::size_t> connector;
};

/// Integrals of j over the cells of each label class.
struct RegionFluxes {
    double prime = 0.0;
    double plus = 0.0;
    double minus = 0.0;
    double unresolved = 0.0;
    double balance() const { return plus + minus; }
};

enum class UnresolvedReason { None, Escaped, Node, NotPaired, Underflow, Other };

std::string_view to_string(UnresolvedReason reason);

struct SurfacePartition {
    SurfacePatch patch;
    std::vector<CellLabel> labels;
    /// j.n at each cell center.
    std::vector<double> density;
    std::vector<UnresolvedReason> unresolved_reason;
    std::vector<Pairing> pairings;
    std::vector<Trajectory> connectors;
    double density_tolerance = 0.0;
    double max_unresolved_fraction = 1e-3;
    /// Pairings whose partner lands outside the patch.
    std::size_t partners_outside = 0;
    /// Midpoint sums over whole cells.
    RegionFluxes cell_fluxes;
    /// Sums with label boundaries located inside cells (see ClassifyControls).
    std::optional<RegionFluxes> refined_fluxes;
    /// Number of back-traces run during flood fill and refinement.
    std::size_t traces = 0;

    std::size_t count(CellLabel label) const;
    double unresolved_fraction() const;
};

struct ClassifyControls {
    IntegratorControls integrator = default_integrator();
    /// Traces are confined to the patch box scaled about its center by this
    /// factor (collapsed axes unbounded); leaving it makes a cell Unresolved.
    double margin = 3.0;
    /// Cells with j < -tol_rel * max|j| are negative-density cells.
    double tol_rel = 1e-9;
    double max_unresolved_fraction = 1e-3;
    /// 0 selects resolve_threads(0).
    std::size_t threads = 0;
    bool keep_connectors = true;
    /// Locate label boundaries along axis 0 by bisection of the pointwise
    /// label and integrate j over the resulting pieces (midpoint rule).
    bool refine_fluxes = true;
    /// Bisection stops when the bracket is below this fraction of a cell.
    double boundary_tolerance = 1e-9;

    static IntegratorControls default_integrator()
    {
        IntegratorControls c;
        c.s_max = 1e3;
        return c;
    }
};

/// Partition of the patch into Sigma', Sigma+ and Sigma- cells relative to
/// the initial surface window `initial` (which must lie in the past of the
/// patch). Connectors always use the current-form field; the velocity law in
/// the controls is ignored.
///
/// Throws InitialDensityNegative if j.n0 < -tol on the sampled initial window
/// (cell centers and Simpson nodes), ArityMismatch for n != 1, and
/// InvalidArgument if the initial window is not in the past of the patch.
SurfacePartition classify_patch(const WaveFunction& psi, const SurfacePatch& patch,
                                const SurfacePatch& initial, const ClassifyControls& controls = {});

/// Pointwise label of one surface point, by the same rules as classify_patch
/// (negative density, else back-trace to the patch surface or the initial one).
CellLabel classify_point(const WaveFunction& psi, const Hypersurface& sigma,
                         const Hypersurface& initial, const FourVector& y, double tolerance,
                         const ClassifyControls& controls, const RegionPredicate& inside,
                         UnresolvedReason* reason = nullptr);

struct MeasurableDistribution {
    /// j on Sigma' cells, 0 on Sigma+, Sigma- and Unresolved cells.
    std::vector<double> rho;
    /// sum rho * cell volume
    double integral = 0.0;
};

/// Throws TooManyUnresolved if the unresolved fraction exceeds the
/// partition's threshold.
MeasurableDistribution measurable_distribution(const SurfacePartition& part);

}  // namespace kgbohm
