#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "kgbohm/dynamics.hpp"
#include "kgbohm/surface.hpp"
#include "kgbohm/wavefunction.hpp"

namespace kgbohm {

/// How initial positions are drawn on the initial window.
enum class InitialLaw {
    /// Density j.n normalized over the window.
    Current,
    /// Uniform in the adapted coordinates of the window.
    Uniform,
};

std::string_view to_string(InitialLaw law);
/// Accepts "current" and "uniform". Throws InvalidArgument.
InitialLaw parse_initial_law(std::string_view name);

/// Density j.n on a window of the initial surface together with its
/// normalization. The support is truncated to the window; `tail_flag` marks
/// windows whose boundary still carries noticeable density.
struct InitialDistribution {
    SurfacePatch patch0;
    WaveFunction psi;
    /// Composite Simpson integral of j.n over patch0.
    double normalization = 0.0;
    /// Mean j.n over the boundary nodes of the Simpson grid and over the rest.
    double boundary_mean = 0.0;
    double interior_mean = 0.0;
    /// boundary_mean > 1e-3 * interior_mean
    bool tail_flag = false;
    /// Largest j.n seen on the scan grid, times 1.01.
    double density_bound = 0.0;

    /// j.n at adapted coordinates u of patch0.
    double density(const Vec3& u) const;
};

/// Simpson quadrature of j.n on a grid with the patch cell edges and midpoints
/// as nodes along every non-collapsed axis. Throws InitialDensityNegative if
/// j.n < -tol_rel * max|j.n| at a node (the message names the coordinates),
/// ArityMismatch for n != 1 and MaxDensityNotFound if no node has j.n > 0.
InitialDistribution normalize_on_surface(const WaveFunction& psi, const SurfacePatch& patch0,
                                         double tol_rel = 1e-9);

struct EnsembleSamples {
    std::vector<FourVector> points;
    std::uint64_t seed = 0;
    InitialLaw law = InitialLaw::Current;
    /// Normalization of the distribution the samples were drawn from (Z for
    /// the current law, the window volume for the uniform one).
    double normalization = 0.0;
};

/// Draws `count` points on the initial window. Sample i uses its own
/// generator seeded from (seed, i), so the list is a pure function of the
/// arguments (and not of the thread count). Current-law samples come from
/// rejection against density_bound; MaxDensityNotFound is thrown if a sample
/// needs more than 10^7 proposals.
EnsembleSamples sample_initial(const InitialDistribution& dist, std::size_t count,
                               std::uint64_t seed, InitialLaw law = InitialLaw::Current,
                               std::size_t threads = 0);

struct EnsembleCrossing {
    std::size_t sample = 0;
    FourVector point;
    double s = 0.0;
    /// Cell of the Sigma patch holding the point, if any.
    std::optional<std::size_t> cell;
};

struct EnsembleResult {
    SurfacePatch patch;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    InitialLaw law = InitialLaw::Current;
    double normalization = 0.0;
    /// First crossings of Sigma, ordered by sample index.
    std::vector<EnsembleCrossing> crossings;
    /// Per-cell counts of crossings on the patch.
    std::vector<std::size_t> histogram;
    std::size_t outside_patch = 0;
    /// Worldlines that never reached Sigma (s_max, region, step limits).
    std::size_t escaped = 0;
    std::size_t node_terminated = 0;
};

/// Integrates each sample to its first crossing of the patch surface and bins
/// the crossing points. The result does not depend on the thread count.
/// Throws ArityMismatch for n != 1.
EnsembleResult propagate_ensemble(const WaveFunction& psi, const EnsembleSamples& samples,
                                  const SurfacePatch& patch, const IntegratorControls& controls,
                                  std::size_t threads = 0);

struct CellComparison {
    std::size_t cell = 0;
    CellLabel label = CellLabel::SigmaPrime;
    bool buffer = false;
    std::size_t observed = 0;
    /// N rho cellvolume / Z on Sigma' cells, 0 elsewhere.
    double expected = 0.0;
    /// (observed - expected) / expected, 0 where expected is 0.
    double deviation = 0.0;
};

struct ComparisonReport {
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    InitialLaw law = InitialLaw::Current;
    std::size_t buffer_cells = 1;
    double min_expected = 10.0;
    /// Crossings per label of the containing cell.
    std::size_t in_prime = 0, in_plus = 0, in_minus = 0, in_unresolved = 0;
    /// Crossings in Sigma+ or Sigma- cells farther than the buffer from any
    /// other label. Predicted to be 0.
    std::size_t band_hits = 0;
    /// Crossings in Sigma+ or Sigma- cells within the buffer.
    std::size_t buffer_hits = 0;
    std::vector<CellComparison> cells;
    /// Pearson statistic over Sigma' cells outside the buffer with expected
    /// count >= min_expected. Only meaningful for the current law.
    double chi_square = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    /// max over those cells of |f_obs - f_pred|, both normalized to 1 over
    /// the cells used.
    double sup_deviation = 0.0;
};

/// Throws PatchMismatch unless both refer to the same patch.
ComparisonReport compare_to_prediction(const EnsembleResult& result, const SurfacePartition& part,
                                       std::size_t buffer_cells = 1, double min_expected = 10.0);

}  // namespace kgbohm
