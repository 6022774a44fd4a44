#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kgbohm/spacetime.hpp"
#include "kgbohm/wavefunction.hpp"

namespace kgbohm {

/// Which vector field drives dx_a/ds.
///
/// CurrentForm and PhaseGradientForm are the same field written two ways:
/// j_a/(2m psi* psi) = -partial_a S/m exactly. RawCurrent integrates j_a itself,
/// which differs from them by the positive factor 2m psi* psi, so it traces the
/// same curves with a different parameter s.
enum class VelocityLaw { CurrentForm, PhaseGradientForm, RawCurrent };

std::string_view to_string(VelocityLaw law);
/// Accepts "current", "phase_gradient", "raw_current". Throws InvalidArgument.
VelocityLaw parse_velocity_law(std::string_view name);

/// j_a^mu = i (psi* partial_a^mu psi - psi partial_a^mu psi*).
FourVector current(const WaveFunction& psi, const Configuration& cfg, std::size_t a);
std::vector<FourVector> currents(const WaveFunction& psi, const Configuration& cfg);

/// psi = R exp(iS).
struct PolarForm {
    double amplitude = 0.0;
    /// [a] -> partial_a^mu S
    std::vector<FourVector> phase_gradient;
};

/// The node threshold applies to |psi|^2; std::nullopt selects the wave
/// function's default (1e-12 max|c_k|^2). Throws NodeEncountered below it.
PolarForm polar(const WaveFunction& psi, const Configuration& cfg,
                std::optional<double> node_threshold = std::nullopt);

/// Q = (1/2m) sum_a (box_a R)/R, from analytic derivatives of psi.
double quantum_potential(const WaveFunction& psi, const Configuration& cfg,
                         std::optional<double> node_threshold = std::nullopt);

/// [a] -> partial_a^mu Q, analytic (uses third derivatives of psi).
std::vector<FourVector> quantum_potential_gradient(
    const WaveFunction& psi, const Configuration& cfg,
    std::optional<double> node_threshold = std::nullopt);

/// -sum_a (dS_a.dS_a)/2m + n m/2 + Q together with the magnitude of its terms.
struct HamiltonJacobiResidual {
    double residual = 0.0;
    double scale = 0.0;  ///< |kinetic term| + n m/2 + |Q|
    double relative() const { return std::abs(residual) / (1.0 + scale); }
};

HamiltonJacobiResidual hamilton_jacobi_residual(
    const WaveFunction& psi, const Configuration& cfg,
    std::optional<double> node_threshold = std::nullopt);

/// [a] -> dx_a/ds under the chosen law.
std::vector<FourVector> velocity_field(const WaveFunction& psi, const Configuration& cfg,
                                       VelocityLaw law,
                                       std::optional<double> node_threshold = std::nullopt);

struct IntegratorControls {
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = 0.1;
    double min_step = 1e-12;
    double s_max = 10.0;
    VelocityLaw law = VelocityLaw::CurrentForm;
    /// +1 follows the field, -1 traces it backwards (dx/ds = -v).
    int direction = +1;
    /// When positive, samples are recorded only at s = k*output_step (and at
    /// the termination point); internal steps never straddle a grid point.
    double output_step = 0.0;
    std::optional<double> node_threshold;
    std::size_t max_steps = 5'000'000;

    bool operator==(const IntegratorControls&) const = default;
};

/// Termination on the first crossing of `surface` by particle `particle`.
struct StopSurface {
    Hypersurface surface;
    std::size_t particle = 0;
};

struct CrossingEvent {
    double s = 0.0;
    FourVector point;
    /// Sign of the surface density j.n at the crossing (+1 or -1).
    int direction = 0;
    /// Index into the stop-surface list (0 for find_crossings results).
    std::size_t stop_index = 0;
};

enum class TerminationKind {
    ReachedSurface,
    ReachedSMax,
    NodeEncountered,
    StepUnderflow,
    EscapedRegion,
    StepLimit,
};

std::string_view to_string(TerminationKind kind);

struct Termination {
    TerminationKind kind = TerminationKind::ReachedSMax;
    double s = 0.0;
    /// |psi|^2 at the node, for NodeEncountered.
    double density = 0.0;
    std::optional<CrossingEvent> crossing;
};

struct TrajectoryPoint {
    double s = 0.0;
    Configuration cfg;
    /// [a] -> dx_a/ds at this point (includes the integration direction).
    std::vector<FourVector> velocity;
};

struct Trajectory {
    std::vector<TrajectoryPoint> samples;
    Termination termination;
    VelocityLaw law = VelocityLaw::CurrentForm;
    int direction = +1;
};

/// Returns true while a configuration is inside the permitted region.
using RegionPredicate = std::function<bool(const Configuration&)>;

/// Dormand-Prince 5(4) with PI step control on the 4n-dimensional system
/// dx_a/ds = v_a(x_1..x_n), all particles sharing the parameter s.
///
/// Stops at s_max, at a node, on step underflow, when `inside` turns false,
/// or at the first crossing of any stop surface. A point that starts on a
/// stop surface (|distance| <= 1e-10) does not count as a crossing. Crossings
/// are detected from sign changes between steps and from the cubic Hermite
/// interpolant of the step (which catches grazing double crossings), then
/// refined by bisection on re-integrated partial steps to |distance| < 1e-10.
/// Never throws for dynamical failures; they are encoded in `termination`.
Trajectory integrate_trajectory(const WaveFunction& psi, const Configuration& cfg0,
                                const IntegratorControls& controls,
                                std::span<const StopSurface> stops = {},
                                const RegionPredicate& inside = {});

/// Applies Lambda to every sample position and velocity.
Trajectory transformed(const Trajectory& traj, const LorentzTransform& lambda);

/// Largest distance (Euclidean in R^{4n}) from a sample of `a` to the curve of
/// `b`, where `b` is interpolated segment-wise by cubic Hermite polynomials
/// built from its sample positions and velocities.
double curve_set_distance(const Trajectory& a, const Trajectory& b);

/// m * d^2 x_a/ds^2 - partial_a^mu Q at the middle sample, the second
/// derivative taken by the three-point central difference.
/// Throws NonuniformSpacing if the two s gaps differ by more than 1%.
std::vector<FourVector> eom_residual(const WaveFunction& psi,
                                     std::span<const TrajectoryPoint> triple,
                                     std::optional<double> node_threshold = std::nullopt);

/// Central-difference divergence partial_{a mu} j_a^mu over the four
/// coordinates of particle a. `scale` is sum_mu |partial_mu j_a^mu| from the
/// same stencil, so |divergence|/(1 + scale) is a dimensionless residual.
struct DivergenceEstimate {
    double divergence = 0.0;
    double scale = 0.0;
    double normalized() const;
};

DivergenceEstimate conservation_residual(const WaveFunction& psi, const Configuration& cfg,
                                         std::size_t a, double h);

/// Central-difference estimate of sum_a partial_a^mu (R^2 partial_{a mu} S).
DivergenceEstimate continuity_residual(const WaveFunction& psi, const Configuration& cfg,
                                       double h,
                                       std::optional<double> node_threshold = std::nullopt);

}  // namespace kgbohm
