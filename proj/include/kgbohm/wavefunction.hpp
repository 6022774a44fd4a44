#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "kgbohm/spacetime.hpp"

namespace kgbohm {

using Complex = std::complex<double>;

/// One plane-wave factor exp(-i p.x) on the mass shell p.p = m^2.
class Mode {
public:
    /// p^0 = frequency_sign * sqrt(m^2 + |p|^2). frequency_sign must be +1 or -1.
    Mode(double mass, const Vec3& momentum, int frequency_sign = +1);

    /// Test fixture: a mode with an explicitly chosen energy, which is
    /// generally off the mass shell. Only used to exercise residual detectors.
    static Mode off_shell(double mass, const Vec3& momentum, double energy);

    double mass() const { return mass_; }
    const Vec3& momentum() const { return momentum_; }
    int frequency_sign() const { return sign_; }
    bool on_shell() const { return on_shell_; }
    /// Contravariant four-momentum (p^0, p).
    const FourVector& four_momentum() const { return four_momentum_; }

private:
    Mode() = default;

    double mass_ = 0.0;
    Vec3 momentum_{};
    int sign_ = +1;
    bool on_shell_ = true;
    FourVector four_momentum_;
};

/// Separable product c * prod_a exp(-i p_a.x_a), one mode per particle slot.
struct ModeTerm {
    Complex coefficient;
    std::vector<Mode> modes;
};

/// Positions x_1..x_n of the n particles.
using Configuration = std::vector<FourVector>;

/// Analytic derivatives of psi at one configuration. All spacetime indices
/// are contravariant (partial^mu). Filled up to the requested order.
struct Derivatives {
    std::size_t particles = 0;
    int order = 0;
    Complex value;
    /// [a] -> partial_a^mu psi
    std::vector<ComplexFourVector> first;
    /// [a*n + b][lambda*4 + mu] -> partial_a^lambda partial_b^mu psi
    std::vector<std::array<Complex, 16>> second;
    /// [b] -> partial_b^mu partial_{b mu} psi
    std::vector<Complex> box;
    /// [a*n + b] -> partial_a^lambda (box_b psi)
    std::vector<ComplexFourVector> grad_box;
};

/// Finite superposition of separable on-shell plane-wave products for n
/// particles of common mass m. Immutable; all evaluation members are pure.
class WaveFunction {
public:
    static constexpr std::size_t kMaxTerms = 1'000'000;
    static constexpr std::size_t kMaxSymmetrizedParticles = 8;

    /// Throws NonpositiveMass, EmptyExpansion, BadArity, TooManyTerms, or
    /// InvalidArgument (mode mass differs from m).
    WaveFunction(double mass, std::size_t particles, std::vector<ModeTerm> terms,
                 bool symmetrized = false);

    double mass() const { return mass_; }
    std::size_t particles() const { return n_; }
    bool symmetrized() const { return symmetrized_; }
    const std::vector<ModeTerm>& terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }
    /// max_k |c_k|
    double max_coefficient() const { return max_coefficient_; }
    /// 1e-12 * max_k |c_k|^2, the default threshold on |psi|^2 below which a
    /// configuration counts as a node.
    double default_node_threshold() const;

    Complex evaluate(const Configuration& cfg) const;
    ComplexFourVector gradient(const Configuration& cfg, std::size_t a) const;
    Complex second_derivative(const Configuration& cfg, std::size_t a, std::size_t mu,
                              std::size_t nu) const;
    /// (partial_a^mu partial_{a mu} + m^2) psi
    Complex kg_residual(const Configuration& cfg, std::size_t a) const;

    /// Value and derivatives up to `order` (0..3) in a single sweep over terms.
    Derivatives derivatives(const Configuration& cfg, int order) const;

    /// Replaces every momentum p by Lambda p (psi'(Lambda x) = psi(x)).
    WaveFunction transformed(const LorentzTransform& lambda) const;
    /// Tensor product: psi(x_1..x_n) chi(x_{n+1}..x_{n+k}). Masses must match.
    static WaveFunction product(const WaveFunction& first, const WaveFunction& second);
    /// alpha*first + beta*second, merged term-wise.
    static WaveFunction combine(Complex alpha, const WaveFunction& first, Complex beta,
                                const WaveFunction& second);

    /// Flat view of four-momenta, index k*n + a.
    std::span<const FourVector> momenta() const { return momenta_; }
    std::span<const Complex> coefficients() const { return coefficients_; }

private:
    void check_configuration(const Configuration& cfg) const;
    void check_index(std::size_t a) const;

    double mass_;
    std::size_t n_;
    std::vector<ModeTerm> terms_;
    bool symmetrized_;
    double max_coefficient_ = 0.0;
    std::vector<FourVector> momenta_;
    std::vector<Complex> coefficients_;
};

/// One momentum entry of make_wavefunction: spatial momentum and sign of p^0.
struct MomentumSpec {
    Vec3 momentum{};
    int frequency_sign = +1;
};

struct TermSpec {
    Complex coefficient;
    std::vector<MomentumSpec> momenta;
};

/// Builds a wave function whose modes are all placed on the mass shell.
WaveFunction make_wavefunction(double mass, std::size_t particles,
                               const std::vector<TermSpec>& terms);

/// Averages every term over all n! permutations of its mode list.
/// Throws AlreadySymmetrized, or TooManyParticles for n > 8.
WaveFunction symmetrize(const WaveFunction& psi);

/// Single-particle Gaussian momentum packet sampled on a regular grid.
/// Axes with zero width collapse to the center momentum.
struct GaussianPacketSpec {
    Vec3 center{};
    Vec3 width{};
    int points_per_axis = 21;
    double extent_sigmas = 4.0;
    int frequency_sign = +1;
};

/// Terms of the n-particle product of identical packets (grid^n terms).
std::vector<TermSpec> gaussian_packet_terms(const GaussianPacketSpec& spec,
                                            std::size_t particles = 1);

}  // namespace kgbohm
