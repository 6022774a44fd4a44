#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgbohm/dynamics.hpp"
#include "kgbohm/ensemble.hpp"
#include "kgbohm/spacetime.hpp"
#include "kgbohm/surface.hpp"
#include "kgbohm/verify.hpp"
#include "kgbohm/wavefunction.hpp"

namespace kgbohm {

struct MomentumConfig {
    Vec3 momentum{};
    int sign = +1;
    /// Explicit p^0; makes the mode off shell. Only for detector fixtures.
    std::optional<double> energy;
    bool operator==(const MomentumConfig&) const = default;
};

struct TermConfig {
    double re = 1.0;
    double im = 0.0;
    std::vector<MomentumConfig> momenta;
    bool operator==(const TermConfig&) const = default;
};

struct PacketConfig {
    Vec3 center{};
    Vec3 width{};
    int points_per_axis = 21;
    double extent_sigmas = 4.0;
    int sign = +1;
    bool operator==(const PacketConfig&) const = default;
};

/// Either explicit terms or a Gaussian packet (product over particles).
struct WaveConfig {
    double mass = 1.0;
    std::size_t particles = 1;
    std::vector<TermConfig> terms;
    std::optional<PacketConfig> packet;
    bool symmetrize = false;
    /// Every spatial momentum is multiplied by this before building.
    double momentum_scale = 1.0;
    /// Active boost applied to the built wave function (zero: none).
    Vec3 boost{};
    bool operator==(const WaveConfig&) const = default;

    WaveFunction build() const;
};

struct SurfaceConfig {
    std::array<double, 4> normal{1, 0, 0, 0};
    double offset = 0.0;
    bool operator==(const SurfaceConfig&) const = default;

    Hypersurface build() const;
    static SurfaceConfig from(const Hypersurface& s);
};

struct PatchConfig {
    std::array<AxisRange, 3> bounds{};
    std::array<std::size_t, 3> cells{1, 1, 1};
    bool operator==(const PatchConfig&) const = default;

    SurfacePatch build(const Hypersurface& sigma) const;
};

struct ClassifyConfig {
    double margin = 3.0;
    double tol_rel = 1e-9;
    double max_unresolved_fraction = 1e-3;
    bool refine_fluxes = true;
    bool operator==(const ClassifyConfig&) const = default;
};

struct EnsembleConfig {
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    InitialLaw law = InitialLaw::Current;
    std::size_t buffer_cells = 1;
    double min_expected = 10.0;
    bool operator==(const EnsembleConfig&) const = default;
};

struct VerifyConfig {
    std::size_t identity_points = 1000;
    std::uint64_t seed = 42;
    double box = 3.0;
    std::vector<double> betas{0.3, 0.6};
    /// Integrator max_step for the covariance suite (default: the scenario's).
    std::optional<double> covariance_max_step;
    /// Runs the nonrelativistic suite on the wave function with
    /// momentum_scale reset to 1.
    std::optional<std::vector<double>> nonrelativistic_epsilons;
    CensusExpectation census = CensusExpectation::None;
    std::optional<double> census_s_max;
    /// Two single-particle factors: runs the product checks on their product.
    std::vector<WaveConfig> factors;
    bool operator==(const VerifyConfig&) const = default;
};

/// A complete, validated scenario description.
struct ScenarioConfig {
    std::string name;
    WaveConfig wavefunction;
    std::optional<SurfaceConfig> initial_surface;
    std::optional<PatchConfig> initial_patch;
    std::optional<SurfaceConfig> surface;
    std::optional<PatchConfig> patch;
    IntegratorControls integrator;
    /// simulate: stop each trajectory at its first crossing of `surface`.
    bool stop_at_surface = true;
    ClassifyConfig classify;
    EnsembleConfig ensemble;
    VerifyConfig verify;
    std::vector<Configuration> starts;
    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and validates a JSON scenario. Syntax errors name the line and
/// column, validation errors the field path (e.g. /wavefunction/mass).
/// Throws Error(ConfigError).
ScenarioConfig parse_config(std::string_view text);

/// Reads a file, or a builtin scenario given as "builtin:NAME" or as a bare
/// builtin name that is not an existing file.
ScenarioConfig load_config(const std::string& path_or_name);

/// Pretty-printed JSON that parse_config reads back to an equal config.
std::string dump_config(const ScenarioConfig& config);

std::vector<std::string> builtin_names();
/// Throws Error(ConfigError) for unknown names.
ScenarioConfig builtin_scenario(std::string_view name);

}  // namespace kgbohm
