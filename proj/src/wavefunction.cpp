#include "kgbohm/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kgbohm/error.hpp"

namespace kgbohm {

namespace {

constexpr Complex kI{0.0, 1.0};

double shell_energy(double mass, const Vec3& p)
{
    return std::sqrt(mass * mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

}  // namespace

Mode::Mode(double mass, const Vec3& momentum, int frequency_sign)
    : mass_(mass), momentum_(momentum), sign_(frequency_sign)
{
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        fail(ErrorCode::NonpositiveMass, "mode mass must be positive and finite");
    }
    if (frequency_sign != 1 && frequency_sign != -1) {
        fail(ErrorCode::InvalidArgument, "frequency sign must be +1 or -1");
    }
    four_momentum_ = FourVector::from_time_and_space(sign_ * shell_energy(mass, momentum),
                                                     momentum);
}

Mode Mode::off_shell(double mass, const Vec3& momentum, double energy)
{
    Mode m(mass, momentum, energy >= 0.0 ? +1 : -1);
    m.four_momentum_ = FourVector::from_time_and_space(energy, momentum);
    m.on_shell_ = false;
    return m;
}

WaveFunction::WaveFunction(double mass, std::size_t particles, std::vector<ModeTerm> terms,
                           bool symmetrized)
    : mass_(mass), n_(particles), terms_(std::move(terms)), symmetrized_(symmetrized)
{
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        fail(ErrorCode::NonpositiveMass, "wave function mass must be positive and finite");
    }
    if (particles == 0) {
        fail(ErrorCode::BadArity, "particle count must be at least 1");
    }
    if (terms_.empty()) {
        fail(ErrorCode::EmptyExpansion, "wave function needs at least one term");
    }
    if (terms_.size() > kMaxTerms) {
        fail(ErrorCode::TooManyTerms,
             "term count " + std::to_string(terms_.size()) + " exceeds the cap of 1e6");
    }
    momenta_.reserve(terms_.size() * n_);
    coefficients_.reserve(terms_.size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const ModeTerm& term = terms_[k];
        if (term.modes.size() != n_) {
            fail(ErrorCode::BadArity, "term " + std::to_string(k) + " has " +
                                          std::to_string(term.modes.size()) +
                                          " modes, expected " + std::to_string(n_));
        }
        if (!std::isfinite(term.coefficient.real()) || !std::isfinite(term.coefficient.imag())) {
            fail(ErrorCode::NonFinite, "term coefficient is not finite");
        }
        for (const Mode& mode : term.modes) {
            if (mode.mass() != mass_) {
                fail(ErrorCode::InvalidArgument, "all modes must share the wave function mass");
            }
            momenta_.push_back(mode.four_momentum());
        }
        coefficients_.push_back(term.coefficient);
        max_coefficient_ = std::max(max_coefficient_, std::abs(term.coefficient));
    }
}

double WaveFunction::default_node_threshold() const
{
    return 1e-12 * max_coefficient_ * max_coefficient_;
}

void WaveFunction::check_configuration(const Configuration& cfg) const
{
    if (cfg.size() != n_) {
        fail(ErrorCode::ArityMismatch, "configuration has " + std::to_string(cfg.size()) +
                                           " points, wave function has " + std::to_string(n_) +
                                           " particles");
    }
}

void WaveFunction::check_index(std::size_t a) const
{
    if (a >= n_) {
        fail(ErrorCode::IndexOutOfRange, "particle index " + std::to_string(a) +
                                             " out of range for " + std::to_string(n_) +
                                             " particles");
    }
}

Derivatives WaveFunction::derivatives(const Configuration& cfg, int order) const
{
    check_configuration(cfg);
    if (order < 0 || order > 3) {
        fail(ErrorCode::InvalidArgument, "derivative order must be in 0..3");
    }
    const std::size_t n = n_;
    Derivatives d;
    d.particles = n;
    d.order = order;
    if (order >= 1) {
        d.first.assign(n, ComplexFourVector{});
    }
    if (order >= 2) {
        d.second.assign(n * n, std::array<Complex, 16>{});
        d.box.assign(n, Complex{});
    }
    if (order >= 3) {
        d.grad_box.assign(n * n, ComplexFourVector{});
    }

    std::vector<double> shell(n);
    for (std::size_t k = 0; k < coefficients_.size(); ++k) {
        const FourVector* p = momenta_.data() + k * n;
        double phase = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            phase += minkowski_dot(p[a], cfg[a]);
        }
        const Complex v = coefficients_[k] * Complex(std::cos(phase), -std::sin(phase));
        d.value += v;
        if (order < 1) {
            continue;
        }
        // partial^mu exp(-i p.x) = -i p^mu exp(-i p.x)
        const Complex mv = -kI * v;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t mu = 0; mu < 4; ++mu) {
                d.first[a][mu] += p[a][mu] * mv;
            }
        }
        if (order < 2) {
            continue;
        }
        for (std::size_t b = 0; b < n; ++b) {
            shell[b] = minkowski_dot(p[b], p[b]);
            d.box[b] -= shell[b] * v;
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                auto& s = d.second[a * n + b];
                for (std::size_t l = 0; l < 4; ++l) {
                    for (std::size_t mu = 0; mu < 4; ++mu) {
                        s[l * 4 + mu] -= p[a][l] * p[b][mu] * v;
                    }
                }
                if (order >= 3) {
                    auto& g = d.grad_box[a * n + b];
                    for (std::size_t l = 0; l < 4; ++l) {
                        g[l] += p[a][l] * shell[b] * (kI * v);
                    }
                }
            }
        }
    }
    return d;
}

Complex WaveFunction::evaluate(const Configuration& cfg) const
{
    return derivatives(cfg, 0).value;
}

ComplexFourVector WaveFunction::gradient(const Configuration& cfg, std::size_t a) const
{
    check_configuration(cfg);
    check_index(a);
    return derivatives(cfg, 1).first[a];
}

Complex WaveFunction::second_derivative(const Configuration& cfg, std::size_t a, std::size_t mu,
                                        std::size_t nu) const
{
    check_configuration(cfg);
    check_index(a);
    if (mu > 3 || nu > 3) {
        fail(ErrorCode::IndexOutOfRange, "spacetime index out of range");
    }
    return derivatives(cfg, 2).second[a * n_ + a][mu * 4 + nu];
}

Complex WaveFunction::kg_residual(const Configuration& cfg, std::size_t a) const
{
    check_configuration(cfg);
    check_index(a);
    const Derivatives d = derivatives(cfg, 2);
    return d.box[a] + mass_ * mass_ * d.value;
}

WaveFunction WaveFunction::transformed(const LorentzTransform& lambda) const
{
    std::vector<ModeTerm> out;
    out.reserve(terms_.size());
    for (const ModeTerm& term : terms_) {
        ModeTerm t{term.coefficient, {}};
        t.modes.reserve(term.modes.size());
        for (const Mode& mode : term.modes) {
            const FourVector q = lambda(mode.four_momentum());
            if (mode.on_shell()) {
                t.modes.emplace_back(mass_, q.spatial(), mode.frequency_sign());
            } else {
                t.modes.push_back(Mode::off_shell(mass_, q.spatial(), q[0]));
            }
        }
        out.push_back(std::move(t));
    }
    return WaveFunction(mass_, n_, std::move(out), symmetrized_);
}

WaveFunction WaveFunction::product(const WaveFunction& first, const WaveFunction& second)
{
    if (first.mass() != second.mass()) {
        fail(ErrorCode::InvalidArgument, "product factors must share the same mass");
    }
    std::vector<ModeTerm> out;
    out.reserve(first.term_count() * second.term_count());
    for (const ModeTerm& a : first.terms()) {
        for (const ModeTerm& b : second.terms()) {
            ModeTerm t{a.coefficient * b.coefficient, a.modes};
            t.modes.insert(t.modes.end(), b.modes.begin(), b.modes.end());
            out.push_back(std::move(t));
        }
    }
    return WaveFunction(first.mass(), first.particles() + second.particles(), std::move(out));
}

WaveFunction WaveFunction::combine(Complex alpha, const WaveFunction& first, Complex beta,
                                   const WaveFunction& second)
{
    if (first.mass() != second.mass() || first.particles() != second.particles()) {
        fail(ErrorCode::InvalidArgument, "combined wave functions must share mass and arity");
    }
    std::vector<ModeTerm> out;
    out.reserve(first.term_count() + second.term_count());
    for (const ModeTerm& t : first.terms()) {
        out.push_back({alpha * t.coefficient, t.modes});
    }
    for (const ModeTerm& t : second.terms()) {
        out.push_back({beta * t.coefficient, t.modes});
    }
    return WaveFunction(first.mass(), first.particles(), std::move(out),
                        first.symmetrized() && second.symmetrized());
}

WaveFunction make_wavefunction(double mass, std::size_t particles,
                               const std::vector<TermSpec>& terms)
{
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        fail(ErrorCode::NonpositiveMass, "mass must be positive and finite");
    }
    if (terms.empty()) {
        fail(ErrorCode::EmptyExpansion, "wave function needs at least one term");
    }
    std::vector<ModeTerm> out;
    out.reserve(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const TermSpec& spec = terms[k];
        if (spec.momenta.size() != particles) {
            fail(ErrorCode::BadArity, "term " + std::to_string(k) + " supplies " +
                                          std::to_string(spec.momenta.size()) +
                                          " momenta, expected " + std::to_string(particles));
        }
        ModeTerm t{spec.coefficient, {}};
        t.modes.reserve(particles);
        for (const MomentumSpec& m : spec.momenta) {
            t.modes.emplace_back(mass, m.momentum, m.frequency_sign);
        }
        out.push_back(std::move(t));
    }
    return WaveFunction(mass, particles, std::move(out));
}

WaveFunction symmetrize(const WaveFunction& psi)
{
    if (psi.symmetrized()) {
        fail(ErrorCode::AlreadySymmetrized, "wave function is already symmetrized");
    }
    const std::size_t n = psi.particles();
    if (n > WaveFunction::kMaxSymmetrizedParticles) {
        fail(ErrorCode::TooManyParticles,
             "symmetrization supports at most 8 particles, got " + std::to_string(n));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double factorial = 1.0;
    for (std::size_t i = 2; i <= n; ++i) {
        factorial *= static_cast<double>(i);
    }
    if (psi.term_count() * factorial > static_cast<double>(WaveFunction::kMaxTerms)) {
        fail(ErrorCode::TooManyTerms, "symmetrized expansion would exceed the term cap");
    }
    std::vector<ModeTerm> out;
    out.reserve(psi.term_count() * static_cast<std::size_t>(factorial));
    for (const ModeTerm& term : psi.terms()) {
        std::iota(perm.begin(), perm.end(), 0);
        do {
            ModeTerm t{term.coefficient / factorial, {}};
            t.modes.reserve(n);
            for (std::size_t a = 0; a < n; ++a) {
                t.modes.push_back(term.modes[perm[a]]);
            }
            out.push_back(std::move(t));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return WaveFunction(psi.mass(), n, std::move(out), true);
}

std::vector<TermSpec> gaussian_packet_terms(const GaussianPacketSpec& spec,
                                            std::size_t particles)
{
    if (spec.points_per_axis < 1 || !(spec.extent_sigmas > 0.0)) {
        fail(ErrorCode::InvalidArgument, "packet grid needs >= 1 point and positive extent");
    }
    if (particles == 0) {
        fail(ErrorCode::BadArity, "packet needs at least one particle");
    }
    // Per-axis nodes and weights (Gaussian density times spacing).
    std::array<std::vector<std::pair<double, double>>, 3> axes;
    for (std::size_t i = 0; i < 3; ++i) {
        const double w = spec.width[i];
        if (w < 0.0 || !std::isfinite(w)) {
            fail(ErrorCode::InvalidArgument, "packet width must be nonnegative");
        }
        if (w == 0.0 || spec.points_per_axis == 1) {
            axes[i].emplace_back(spec.center[i], 1.0);
            continue;
        }
        const int count = spec.points_per_axis;
        const double lo = spec.center[i] - spec.extent_sigmas * w;
        const double step = 2.0 * spec.extent_sigmas * w / (count - 1);
        for (int j = 0; j < count; ++j) {
            const double p = lo + j * step;
            const double z = (p - spec.center[i]) / w;
            axes[i].emplace_back(p, std::exp(-0.5 * z * z) * step);
        }
    }
    std::vector<std::pair<Vec3, double>> single;
    for (const auto& [px, wx] : axes[0]) {
        for (const auto& [py, wy] : axes[1]) {
            for (const auto& [pz, wz] : axes[2]) {
                single.push_back({Vec3{px, py, pz}, wx * wy * wz});
            }
        }
    }
    double total = 1.0;
    for (std::size_t a = 0; a < particles; ++a) {
        total *= static_cast<double>(single.size());
    }
    if (total > static_cast<double>(WaveFunction::kMaxTerms)) {
        fail(ErrorCode::TooManyTerms, "packet expansion exceeds the term cap");
    }
    std::vector<TermSpec> terms{TermSpec{Complex(1.0, 0.0), {}}};
    for (std::size_t a = 0; a < particles; ++a) {
        std::vector<TermSpec> next;
        next.reserve(terms.size() * single.size());
        for (const TermSpec& t : terms) {
            for (const auto& [p, w] : single) {
                TermSpec u = t;
                u.coefficient *= w;
                u.momenta.push_back({p, spec.frequency_sign});
                next.push_back(std::move(u));
            }
        }
        terms = std::move(next);
    }
    return terms;
}

}  // namespace kgbohm
