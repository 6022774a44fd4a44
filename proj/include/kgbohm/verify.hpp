#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgbohm/dynamics.hpp"
#include "kgbohm/spacetime.hpp"
#include "kgbohm/wavefunction.hpp"

namespace kgbohm {

/// Outcome of one check. `pass` is true exactly when the measured values are
/// within `tolerance` in the sense documented for that check.
struct CheckReport {
    std::string name;
    std::string scenario;
    /// Named measured values in a fixed order.
    std::vector<std::pair<std::string, double>> measured;
    double tolerance = 0.0;
    bool pass = false;
    double runtime_s = 0.0;
    std::string note;

    /// Value of a named measurement (NaN if absent).
    double value(const std::string& key) const;
};

bool all_pass(const std::vector<CheckReport>& reports);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct IdentityOptions {
    std::size_t points = 1000;
    std::uint64_t seed = 42;
    /// Coordinates are drawn uniformly from [-box, box].
    double box = 3.0;
    double kg_tolerance = 1e-10;
    double polar_tolerance = 1e-10;
    double hj_tolerance = 1e-9;
    /// Divergence residuals at the first step size.
    double divergence_tolerance = 1e-6;
    std::vector<double> steps{1e-3, 5e-4, 2.5e-4};
    double slope_lo = 1.7, slope_hi = 2.3;
    /// Residuals below exact_floor * (1e-3 / h) at every step size h count as
    /// round-off of an exact identity (no order fit).
    double exact_floor = 1e-11;
    /// Divergence checks use at most this many of the points.
    std::size_t divergence_points = 200;
    std::optional<double> node_threshold;
};

/// kg_residual (relative to 1 + |psi|), conservation of every current and the
/// continuity identity (normalized residual at the first step and the fitted
/// order over all steps), the polar identity j = -2 R^2 dS (relative to
/// 2|psi||dpsi|) and Hamilton-Jacobi closure. Configurations within
/// 10x the node threshold of a node are skipped and counted.
std::vector<CheckReport> run_identity_suite(const WaveFunction& psi, const std::string& scenario,
                                            const IdentityOptions& options = {});

struct CovarianceOptions {
    std::vector<double> betas{0.3, 0.6};
    /// Boost direction (normalized internally).
    Vec3 direction{1, 0, 0};
    std::vector<Configuration> starts;
    IntegratorControls integrator;
    double curve_tolerance = 1e-6;
    double current_tolerance = 1e-9;
    std::size_t current_points = 100;
    std::uint64_t seed = 42;
    double box = 3.0;
};

/// For every beta: the curve-set distance (both directions) between the
/// boosted images of trajectories and the trajectories of the boosted system,
/// and the largest |j'(Lx) - L j(x)| relative to |j(x)|.
std::vector<CheckReport> run_covariance_suite(const WaveFunction& psi, const std::string& scenario,
                                              const CovarianceOptions& options);

struct NonrelativisticOptions {
    std::vector<double> epsilons{0.1, 0.03, 0.01};
    std::size_t points = 200;
    std::uint64_t seed = 42;
    /// Coordinates are drawn from [-box/eps, box/eps] so that interference
    /// phases stay of order one.
    double box = 3.0;
    double slope_lo = 1.7, slope_hi = 2.3;
};

/// Scales every mode momentum of `unit_psi` (momenta of size <= 1 in units
/// of m) by eps and measures max_a |j_a^0 - 2m psi*psi| / (2m psi*psi).
/// Passes when the deviation is exactly zero at every eps, or when the fitted
/// order is in [slope_lo, slope_hi]; in both cases every j_a^0 must be
/// positive at the smallest eps. Reports C = deviation / eps^2.
CheckReport run_nonrelativistic_limit_suite(const WaveFunction& unit_psi,
                                            const std::string& scenario,
                                            const NonrelativisticOptions& options = {});

/// The wave function with every spatial momentum multiplied by `factor`
/// (modes are placed back on the mass shell).
WaveFunction scale_momenta(const WaveFunction& psi, double factor);

enum class CensusExpectation { None, AllTimelike, SomeSpacelike };

struct CensusOptions {
    std::vector<Configuration> starts;
    IntegratorControls integrator;
    /// Relative tolerance of the lightlike class.
    double lightlike_tolerance = 1e-9;
    CensusExpectation expect = CensusExpectation::None;
};

/// Fractions of timelike, lightlike and spacelike velocity samples, per
/// particle and overall. With CensusExpectation::None the check only reports.
CheckReport run_superluminal_census(const WaveFunction& psi, const std::string& scenario,
                                    const CensusOptions& options);

struct FactorizationOptions {
    std::vector<Configuration> starts;
    IntegratorControls integrator;
    double trajectory_tolerance = 1e-8;
    double separable_tolerance = 1e-9;
    double witness_threshold = 1e-3;
    double velocity_threshold = 1e-6;
    std::size_t scan_points = 200;
    std::uint64_t seed = 42;
    double box = 3.0;
    /// Step of the difference in x_2.
    double h = 1e-3;
};

/// Two-particle checks. For a product psi (factors given): joint against
/// independent integration, component-wise at equal s, and the mixed
/// derivative d^2 Q / dx_1 dx_2 (difference in x_2 of the analytic dQ/dx_1).
/// For an entangled psi: largest mixed derivative and largest change of
/// particle 1's velocity with x_2 found over a scan of random points.
std::vector<CheckReport> run_factorization_suite(
    const std::optional<std::pair<WaveFunction, WaveFunction>>& product_factors,
    const std::optional<WaveFunction>& entangled, const std::string& scenario,
    const FactorizationOptions& options);

}  // namespace kgbohm
