#include "kgbohm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hermite.hpp"
#include "kgbohm/error.hpp"

namespace kgbohm {

using detail::sign_of;

namespace {

double resolve_threshold(const WaveFunction& psi, std::optional<double> threshold)
{
    return threshold.value_or(psi.default_node_threshold());
}

void require_not_node(double density, double threshold)
{
    if (!(density > threshold)) {
        std::ostringstream os;
        os.precision(6);
        os << "|psi|^2 = " << density << " is not above the node threshold " << threshold;
        fail(ErrorCode::NodeEncountered, os.str());
    }
}

FourVector current_from(const Complex& value, const ComplexFourVector& grad)
{
    // i(psi* d psi - psi d psi*) = -2 Im(psi* d psi)
    const Complex cv = std::conj(value);
    return FourVector(-2.0 * (cv * grad[0]).imag(), -2.0 * (cv * grad[1]).imag(),
                      -2.0 * (cv * grad[2]).imag(), -2.0 * (cv * grad[3]).imag());
}

FourVector phase_gradient_from(const Complex& value, const ComplexFourVector& grad)
{
    return FourVector((grad[0] / value).imag(), (grad[1] / value).imag(),
                      (grad[2] / value).imag(), (grad[3] / value).imag());
}

/// R box_b R, i.e. Re(d psi*.d psi) + Re(psi* box psi) - dR.dR, for each b.
std::vector<double> r_box_r(const Derivatives& d)
{
    const std::size_t n = d.particles;
    const double density = std::norm(d.value);
    const Complex cv = std::conj(d.value);
    std::vector<double> out(n);
    for (std::size_t b = 0; b < n; ++b) {
        double grad_sq = 0.0;
        double dr_sq = 0.0;
        for (std::size_t mu = 0; mu < 4; ++mu) {
            const double g = kMetricDiagonal[mu];
            grad_sq += g * std::norm(d.first[b][mu]);
            const double re = (cv * d.first[b][mu]).real();
            dr_sq += g * re * re;
        }
        out[b] = grad_sq + (cv * d.box[b]).real() - dr_sq / density;
    }
    return out;
}

}  // namespace

std::string_view to_string(VelocityLaw law)
{
    switch (law) {
    case VelocityLaw::CurrentForm: return "current";
    case VelocityLaw::PhaseGradientForm: return "phase_gradient";
    case VelocityLaw::RawCurrent: return "raw_current";
    }
    return "unknown";
}

VelocityLaw parse_velocity_law(std::string_view name)
{
    if (name == "current") {
        return VelocityLaw::CurrentForm;
    }
    if (name == "phase_gradient") {
        return VelocityLaw::PhaseGradientForm;
    }
    if (name == "raw_current") {
        return VelocityLaw::RawCurrent;
    }
    fail(ErrorCode::InvalidArgument, "unknown velocity law '" + std::string(name) +
                                         "' (expected current, phase_gradient, raw_current)");
}

std::string_view to_string(TerminationKind kind)
{
    switch (kind) {
    case TerminationKind::ReachedSurface: return "ReachedSurface";
    case TerminationKind::ReachedSMax: return "ReachedSMax";
    case TerminationKind::NodeEncountered: return "NodeEncountered";
    case TerminationKind::StepUnderflow: return "StepUnderflow";
    case TerminationKind::EscapedRegion: return "EscapedRegion";
    case TerminationKind::StepLimit: return "StepLimit";
    }
    return "unknown";
}

FourVector current(const WaveFunction& psi, const Configuration& cfg, std::size_t a)
{
    const ComplexFourVector grad = psi.gradient(cfg, a);
    return current_from(psi.evaluate(cfg), grad);
}

std::vector<FourVector> currents(const WaveFunction& psi, const Configuration& cfg)
{
    const Derivatives d = psi.derivatives(cfg, 1);
    std::vector<FourVector> out;
    out.reserve(d.particles);
    for (std::size_t a = 0; a < d.particles; ++a) {
        out.push_back(current_from(d.value, d.first[a]));
    }
    return out;
}

PolarForm polar(const WaveFunction& psi, const Configuration& cfg,
                std::optional<double> node_threshold)
{
    const Derivatives d = psi.derivatives(cfg, 1);
    const double density = std::norm(d.value);
    require_not_node(density, resolve_threshold(psi, node_threshold));
    PolarForm out;
    out.amplitude = std::sqrt(density);
    for (std::size_t a = 0; a < d.particles; ++a) {
        out.phase_gradient.push_back(phase_gradient_from(d.value, d.first[a]));
    }
    return out;
}

double quantum_potential(const WaveFunction& psi, const Configuration& cfg,
                         std::optional<double> node_threshold)
{
    const Derivatives d = psi.derivatives(cfg, 2);
    const double density = std::norm(d.value);
    require_not_node(density, resolve_threshold(psi, node_threshold));
    double sum = 0.0;
    for (double v : r_box_r(d)) {
        sum += v;
    }
    return sum / (2.0 * psi.mass() * density);
}

std::vector<FourVector> quantum_potential_gradient(const WaveFunction& psi,
                                                   const Configuration& cfg,
                                                   std::optional<double> node_threshold)
{
    const Derivatives d = psi.derivatives(cfg, 3);
    const std::size_t n = d.particles;
    const double density = std::norm(d.value);
    require_not_node(density, resolve_threshold(psi, node_threshold));
    const Complex cv = std::conj(d.value);
    const std::vector<double> rbr = r_box_r(d);

    // G_b^mu = psi* partial_b^mu psi
    std::vector<ComplexFourVector> g(n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t mu = 0; mu < 4; ++mu) {
            g[b][mu] = cv * d.first[b][mu];
        }
    }

    std::vector<FourVector> out;
    out.reserve(n);
    for (std::size_t a = 0; a < n; ++a) {
        std::array<double, 4> grad_q{};
        for (std::size_t l = 0; l < 4; ++l) {
            const Complex dl_conj = std::conj(d.first[a][l]);
            const double d_density = 2.0 * (cv * d.first[a][l]).real();
            double acc = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const auto& second = d.second[a * n + b];
                double d_grad_sq = 0.0;
                double re_g_dot_d_re_g = 0.0;
                double re_g_sq = 0.0;
                for (std::size_t mu = 0; mu < 4; ++mu) {
                    const double metric = kMetricDiagonal[mu];
                    const Complex dd = second[l * 4 + mu];
                    d_grad_sq += 2.0 * metric * (std::conj(d.first[b][mu]) * dd).real();
                    const double re_g = g[b][mu].real();
                    const double d_re_g = (dl_conj * d.first[b][mu] + cv * dd).real();
                    re_g_dot_d_re_g += metric * re_g * d_re_g;
                    re_g_sq += metric * re_g * re_g;
                }
                const double d_box_term =
                    (dl_conj * d.box[b] + cv * d.grad_box[a * n + b][l]).real();
                const double d_dr_sq =
                    2.0 * re_g_dot_d_re_g / density - re_g_sq * d_density / (density * density);
                const double d_b = d_grad_sq + d_box_term - d_dr_sq;
                acc += d_b / density - rbr[b] * d_density / (density * density);
            }
            grad_q[l] = acc / (2.0 * psi.mass());
        }
        out.emplace_back(grad_q);
    }
    return out;
}

HamiltonJacobiResidual hamilton_jacobi_residual(const WaveFunction& psi,
                                                const Configuration& cfg,
                                                std::optional<double> node_threshold)
{
    const PolarForm p = polar(psi, cfg, node_threshold);
    const double q = quantum_potential(psi, cfg, node_threshold);
    const double m = psi.mass();
    double kinetic = 0.0;
    for (const FourVector& ds : p.phase_gradient) {
        kinetic += minkowski_dot(ds, ds);
    }
    kinetic /= 2.0 * m;
    const double rest = static_cast<double>(psi.particles()) * m / 2.0;
    HamiltonJacobiResidual out;
    out.residual = -kinetic + rest + q;
    out.scale = std::abs(kinetic) + rest + std::abs(q);
    return out;
}

std::vector<FourVector> velocity_field(const WaveFunction& psi, const Configuration& cfg,
                                       VelocityLaw law, std::optional<double> node_threshold)
{
    const Derivatives d = psi.derivatives(cfg, 1);
    const double density = std::norm(d.value);
    require_not_node(density, resolve_threshold(psi, node_threshold));
    const double m = psi.mass();
    std::vector<FourVector> out;
    out.reserve(d.particles);
    for (std::size_t a = 0; a < d.particles; ++a) {
        switch (law) {
        case VelocityLaw::CurrentForm:
            out.push_back(current_from(d.value, d.first[a]) / (2.0 * m * density));
            break;
        case VelocityLaw::PhaseGradientForm:
            out.push_back(-phase_gradient_from(d.value, d.first[a]) / m);
            break;
        case VelocityLaw::RawCurrent: out.push_back(current_from(d.value, d.first[a])); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Integrator

namespace {

struct NodeHit {
    double density;
};

using State = std::vector<double>;

State pack(const Configuration& cfg)
{
    State y;
    y.reserve(cfg.size() * 4);
    for (const FourVector& x : cfg) {
        y.insert(y.end(), x.components().begin(), x.components().end());
    }
    return y;
}

Configuration unpack(const State& y)
{
    Configuration cfg;
    cfg.reserve(y.size() / 4);
    for (std::size_t i = 0; i < y.size(); i += 4) {
        cfg.emplace_back(y[i], y[i + 1], y[i + 2], y[i + 3]);
    }
    return cfg;
}

std::vector<FourVector> unpack_vectors(const State& y) { return unpack(y); }

FourVector particle_point(const State& y, std::size_t a)
{
    return FourVector(y[4 * a], y[4 * a + 1], y[4 * a + 2], y[4 * a + 3]);
}

class Field {
public:
    Field(const WaveFunction& psi, VelocityLaw law, double threshold, int direction)
        : psi_(psi), law_(law), threshold_(threshold), direction_(direction)
    {
    }

    void operator()(const State& y, State& dy) const
    {
        const Configuration cfg = unpack(y);
        const Derivatives d = psi_.derivatives(cfg, 1);
        const double density = std::norm(d.value);
        if (!(density > threshold_)) {
            throw NodeHit{density};
        }
        const double m = psi_.mass();
        dy.resize(y.size());
        const Complex cv = std::conj(d.value);
        for (std::size_t a = 0; a < d.particles; ++a) {
            for (std::size_t mu = 0; mu < 4; ++mu) {
                double v = 0.0;
                switch (law_) {
                case VelocityLaw::CurrentForm:
                    v = -2.0 * (cv * d.first[a][mu]).imag() / (2.0 * m * density);
                    break;
                case VelocityLaw::PhaseGradientForm:
                    v = -(d.first[a][mu] / d.value).imag() / m;
                    break;
                case VelocityLaw::RawCurrent: v = -2.0 * (cv * d.first[a][mu]).imag(); break;
                }
                dy[4 * a + mu] = direction_ * v;
            }
        }
    }

private:
    const WaveFunction& psi_;
    VelocityLaw law_;
    double threshold_;
    int direction_;
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// c2..c5 are implicit in the autonomous system; kept for reference.
[[maybe_unused]] constexpr double kNodes[] = {c2, c3, c4, c5};

struct StepResult {
    State y;
    State k7;
    double error = 0.0;
};

class Stepper {
public:
    Stepper(const Field& f, double rtol, double atol) : f_(f), rtol_(rtol), atol_(atol) {}

    /// One Dormand-Prince step of size h from (y, k1). Throws NodeHit.
    StepResult step(const State& y, const State& k1, double h, bool want_error = true)
    {
        const std::size_t n = y.size();
        tmp_.resize(n);
        auto stage = [&](auto&& combine, State& k) {
            for (std::size_t i = 0; i < n; ++i) {
                tmp_[i] = y[i] + h * combine(i);
            }
            f_(tmp_, k);
        };
        stage([&](std::size_t i) { return a21 * k1[i]; }, k2_);
        stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2_[i]; }, k3_);
        stage([&](std::size_t i) { return a41 * k1[i] + a42 * k2_[i] + a43 * k3_[i]; }, k4_);
        stage(
            [&](std::size_t i) {
                return a51 * k1[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i];
            },
            k5_);
        stage(
            [&](std::size_t i) {
                return a61 * k1[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i];
            },
            k6_);
        StepResult r;
        r.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            r.y[i] = y[i] + h * (a71 * k1[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                                 a76 * k6_[i]);
        }
        if (!want_error) {
            return r;
        }
        f_(r.y, r.k7);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double err = h * (e1 * k1[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] +
                                    e6 * k6_[i] + e7 * r.k7[i]);
            const double sk = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(r.y[i]));
            sum += (err / sk) * (err / sk);
        }
        r.error = std::sqrt(sum / static_cast<double>(n));
        return r;
    }

    double initial_step(const State& y, const State& f0, double max_step)
    {
        const std::size_t n = y.size();
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sk = atol_ + rtol_ * std::abs(y[i]);
            d0 += (y[i] / sk) * (y[i] / sk);
            d1 += (f0[i] / sk) * (f0[i] / sk);
        }
        d0 = std::sqrt(d0 / n);
        d1 = std::sqrt(d1 / n);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, max_step);
        State y1(n), f1;
        for (std::size_t i = 0; i < n; ++i) {
            y1[i] = y[i] + h0 * f0[i];
        }
        f_(y1, f1);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sk = atol_ + rtol_ * std::abs(y[i]);
            d2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
        }
        d2 = std::sqrt(d2 / n) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, max_step});
    }

private:
    const Field& f_;
    double rtol_;
    double atol_;
    State tmp_, k2_, k3_, k4_, k5_, k6_;
};

constexpr double kSurfaceTolerance = 1e-10;

}  // namespace

Trajectory integrate_trajectory(const WaveFunction& psi, const Configuration& cfg0,
                                const IntegratorControls& controls,
                                std::span<const StopSurface> stops, const RegionPredicate& inside)
{
    if (cfg0.size() != psi.particles()) {
        fail(ErrorCode::ArityMismatch, "start configuration arity does not match psi");
    }
    if (!(controls.rtol > 0) || !(controls.atol > 0) || !(controls.max_step > 0) ||
        !(controls.min_step > 0) || !(controls.s_max >= 0) ||
        (controls.direction != 1 && controls.direction != -1) || controls.output_step < 0) {
        fail(ErrorCode::InvalidArgument, "invalid integrator controls");
    }
    for (const StopSurface& stop : stops) {
        if (stop.particle >= psi.particles()) {
            fail(ErrorCode::IndexOutOfRange, "stop surface particle index out of range");
        }
    }

    const double threshold = resolve_threshold(psi, controls.node_threshold);
    const Field field(psi, controls.law, threshold, controls.direction);
    Stepper stepper(field, controls.rtol, controls.atol);

    Trajectory traj;
    traj.law = controls.law;
    traj.direction = controls.direction;

    State y = pack(cfg0);
    State k1;
    auto push_sample = [&](double s, const State& state, const State& deriv) {
        traj.samples.push_back({s, unpack(state), unpack_vectors(deriv)});
    };

    try {
        field(y, k1);
    } catch (const NodeHit& hit) {
        traj.samples.push_back({0.0, cfg0, {}});
        traj.termination = {TerminationKind::NodeEncountered, 0.0, hit.density, std::nullopt};
        return traj;
    }
    push_sample(0.0, y, k1);

    // Side of each stop surface; 0 while the start point sits on it.
    std::vector<int> side(stops.size());
    std::vector<double> dist(stops.size());
    for (std::size_t i = 0; i < stops.size(); ++i) {
        dist[i] = stops[i].surface.signed_distance(particle_point(y, stops[i].particle));
        side[i] = std::abs(dist[i]) <= kSurfaceTolerance ? 0 : sign_of(dist[i]);
    }

    double s = 0.0;
    double h = controls.s_max > 0 ? stepper.initial_step(y, k1, controls.max_step) : 0.0;
    double facold = 1e-4;
    std::size_t out_index = 0;
    std::size_t steps = 0;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9, facmin = 0.2,
                     facmax = 10.0;

    auto finish = [&](TerminationKind kind, double density = 0.0) {
        traj.termination.kind = kind;
        traj.termination.s = s;
        traj.termination.density = density;
    };

    while (true) {
        if (s >= controls.s_max) {
            if (traj.samples.back().s != s) {
                push_sample(s, y, k1);
            }
            finish(TerminationKind::ReachedSMax);
            return traj;
        }
        if (steps++ >= controls.max_steps) {
            push_sample(s, y, k1);
            finish(TerminationKind::StepLimit);
            return traj;
        }
        double target = controls.s_max;
        bool output_target = false;
        if (controls.output_step > 0) {
            const double next = static_cast<double>(out_index + 1) * controls.output_step;
            if (next < target) {
                target = next;
                output_target = true;
            }
        }
        const double remaining = target - s;
        bool lands = false;
        double step = std::min(h, controls.max_step);
        if (step >= remaining) {
            step = remaining;
            lands = true;
        }

        StepResult r;
        try {
            r = stepper.step(y, k1, step);
        } catch (const NodeHit& hit) {
            if (traj.samples.back().s != s) {
                push_sample(s, y, k1);
            }
            finish(TerminationKind::NodeEncountered, hit.density);
            return traj;
        }
        const double err = std::max(r.error, 1e-300);
        const double fac11 = std::pow(err, expo1);
        if (r.error > 1.0) {
            h = step / std::min(1.0 / facmin, fac11 / safe);
            if (h < controls.min_step) {
                if (traj.samples.back().s != s) {
                    push_sample(s, y, k1);
                }
                finish(TerminationKind::StepUnderflow);
                return traj;
            }
            continue;
        }
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(1.0 / facmax, std::min(1.0 / facmin, fac / safe));
        const double h_next = step / fac;
        facold = std::max(r.error, 1e-4);

        // Crossing detection over [s, s + step].
        std::optional<double> earliest;
        std::size_t earliest_stop = 0;
        std::vector<double> new_dist(stops.size());
        for (std::size_t i = 0; i < stops.size(); ++i) {
            const StopSurface& stop = stops[i];
            const double d1 = stop.surface.signed_distance(particle_point(r.y, stop.particle));
            new_dist[i] = d1;
            if (side[i] == 0) {
                continue;
            }
            std::optional<double> bracket_hi;
            if (sign_of(d1) != side[i]) {
                bracket_hi = step;
            } else {
                const FourVector& n = stop.surface.normal();
                const double m0 = minkowski_dot(n, particle_point(k1, stop.particle));
                const double m1 = minkowski_dot(n, particle_point(r.k7, stop.particle));
                if (auto t = detail::Hermite{dist[i], d1, m0, m1, step}.excursion(side[i])) {
                    bracket_hi = *t * step;
                }
            }
            if (!bracket_hi) {
                continue;
            }
            auto distance_at = [&](double theta) {
                const StepResult partial = stepper.step(y, k1, theta, false);
                return stop.surface.signed_distance(particle_point(partial.y, stop.particle));
            };
            double lo = 0.0;
            double hi = *bracket_hi;
            double d_hi;
            try {
                d_hi = hi == step ? d1 : distance_at(hi);
            } catch (const NodeHit&) {
                continue;
            }
            if (sign_of(d_hi) == side[i]) {
                continue;  // interpolant overshot; no true excursion
            }
            double root = hi;
            try {
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double dm = distance_at(mid);
                    root = mid;
                    if (std::abs(dm) < kSurfaceTolerance) {
                        break;
                    }
                    if (sign_of(dm) == side[i]) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(s))) {
                        root = std::abs(distance_at(lo)) < std::abs(distance_at(hi)) ? lo : hi;
                        break;
                    }
                }
            } catch (const NodeHit&) {
                continue;
            }
            if (!earliest || root < *earliest) {
                earliest = root;
                earliest_stop = i;
            }
        }

        if (earliest) {
            const StopSurface& stop = stops[earliest_stop];
            try {
                const StepResult partial = stepper.step(y, k1, *earliest, false);
                State dy;
                field(partial.y, dy);
                s += *earliest;
                push_sample(s, partial.y, dy);
                const FourVector point = particle_point(partial.y, stop.particle);
                const FourVector v = particle_point(dy, stop.particle) *
                                     static_cast<double>(controls.direction);
                CrossingEvent ev{s, point, sign_of(minkowski_dot(stop.surface.normal(), v)),
                                 earliest_stop};
                finish(TerminationKind::ReachedSurface);
                traj.termination.crossing = ev;
                return traj;
            } catch (const NodeHit& hit) {
                finish(TerminationKind::NodeEncountered, hit.density);
                return traj;
            }
        }

        s = lands ? target : s + step;
        y = std::move(r.y);
        k1 = std::move(r.k7);
        for (std::size_t i = 0; i < stops.size(); ++i) {
            dist[i] = new_dist[i];
            if (side[i] == 0 && std::abs(dist[i]) > kSurfaceTolerance) {
                side[i] = sign_of(dist[i]);
            }
        }
        h = h_next;

        const bool on_grid = lands && output_target;
        if (on_grid) {
            ++out_index;
        }
        if (controls.output_step <= 0 || on_grid) {
            push_sample(s, y, k1);
        }
        if (inside && !inside(unpack(y))) {
            if (traj.samples.back().s != s) {
                push_sample(s, y, k1);
            }
            finish(TerminationKind::EscapedRegion);
            return traj;
        }
    }
}

Trajectory transformed(const Trajectory& traj, const LorentzTransform& lambda)
{
    Trajectory out = traj;
    for (TrajectoryPoint& p : out.samples) {
        for (FourVector& x : p.cfg) {
            x = lambda(x);
        }
        for (FourVector& v : p.velocity) {
            v = lambda(v);
        }
    }
    if (out.termination.crossing) {
        out.termination.crossing->point = lambda(out.termination.crossing->point);
    }
    return out;
}

namespace {

using Flat = std::vector<double>;

Flat flatten(const std::vector<FourVector>& v)
{
    Flat out;
    out.reserve(v.size() * 4);
    for (const FourVector& x : v) {
        out.insert(out.end(), x.components().begin(), x.components().end());
    }
    return out;
}

double dist2(const Flat& a, const Flat& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return s;
}

struct Segment {
    // Bezier control points of the cubic Hermite segment.
    std::array<Flat, 4> ctrl;
    Flat center;
    double radius = 0.0;

    Flat at(double t) const
    {
        const double u = 1.0 - t;
        const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
        Flat out(ctrl[0].size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = b0 * ctrl[0][i] + b1 * ctrl[1][i] + b2 * ctrl[2][i] + b3 * ctrl[3][i];
        }
        return out;
    }
};

double distance_to_segment(const Segment& seg, const Flat& p)
{
    constexpr int coarse = 16;
    double best_t = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= coarse; ++i) {
        const double t = static_cast<double>(i) / coarse;
        const double d = dist2(seg.at(t), p);
        if (d < best) {
            best = d;
            best_t = t;
        }
    }
    double lo = std::max(0.0, best_t - 1.0 / coarse);
    double hi = std::min(1.0, best_t + 1.0 / coarse);
    constexpr double phi = 0.6180339887498949;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = dist2(seg.at(x1), p), f2 = dist2(seg.at(x2), p);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = dist2(seg.at(x1), p);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = dist2(seg.at(x2), p);
        }
    }
    best = std::min({best, f1, f2});
    return std::sqrt(best);
}

}  // namespace

double curve_set_distance(const Trajectory& a, const Trajectory& b)
{
    if (a.samples.empty() || b.samples.empty()) {
        fail(ErrorCode::InvalidArgument, "curve_set_distance needs nonempty trajectories");
    }
    std::vector<Segment> segments;
    std::vector<Flat> b_points;
    for (const TrajectoryPoint& p : b.samples) {
        b_points.push_back(flatten(p.cfg));
    }
    for (std::size_t k = 0; k + 1 < b.samples.size(); ++k) {
        const TrajectoryPoint& p0 = b.samples[k];
        const TrajectoryPoint& p1 = b.samples[k + 1];
        const double ds = p1.s - p0.s;
        Segment seg;
        seg.ctrl[0] = b_points[k];
        seg.ctrl[3] = b_points[k + 1];
        const Flat v0 = p0.velocity.empty() ? Flat(seg.ctrl[0].size()) : flatten(p0.velocity);
        const Flat v1 = p1.velocity.empty() ? Flat(seg.ctrl[0].size()) : flatten(p1.velocity);
        seg.ctrl[1] = seg.ctrl[0];
        seg.ctrl[2] = seg.ctrl[3];
        for (std::size_t i = 0; i < seg.ctrl[0].size(); ++i) {
            seg.ctrl[1][i] += ds * v0[i] / 3.0;
            seg.ctrl[2][i] -= ds * v1[i] / 3.0;
        }
        seg.center.assign(seg.ctrl[0].size(), 0.0);
        for (const Flat& c : seg.ctrl) {
            for (std::size_t i = 0; i < c.size(); ++i) {
                seg.center[i] += 0.25 * c[i];
            }
        }
        for (const Flat& c : seg.ctrl) {
            seg.radius = std::max(seg.radius, std::sqrt(dist2(c, seg.center)));
        }
        segments.push_back(std::move(seg));
    }

    double worst = 0.0;
    for (const TrajectoryPoint& pa : a.samples) {
        const Flat p = flatten(pa.cfg);
        double best = std::numeric_limits<double>::infinity();
        for (const Flat& q : b_points) {
            best = std::min(best, std::sqrt(dist2(p, q)));
        }
        for (const Segment& seg : segments) {
            const double lower = std::sqrt(dist2(p, seg.center)) - seg.radius;
            if (lower >= best) {
                continue;
            }
            best = std::min(best, distance_to_segment(seg, p));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

std::vector<FourVector> eom_residual(const WaveFunction& psi,
                                     std::span<const TrajectoryPoint> triple,
                                     std::optional<double> node_threshold)
{
    if (triple.size() != 3) {
        fail(ErrorCode::InvalidArgument, "eom_residual needs exactly three samples");
    }
    const double h1 = triple[1].s - triple[0].s;
    const double h2 = triple[2].s - triple[1].s;
    if (!(h1 > 0) || !(h2 > 0) || std::abs(h1 - h2) > 0.01 * std::max(h1, h2)) {
        fail(ErrorCode::NonuniformSpacing, "sample gaps differ by more than 1%; resample first");
    }
    const Configuration& mid = triple[1].cfg;
    const std::vector<FourVector> grad_q = quantum_potential_gradient(psi, mid, node_threshold);
    const double m = psi.mass();
    std::vector<FourVector> out;
    out.reserve(psi.particles());
    for (std::size_t a = 0; a < psi.particles(); ++a) {
        const FourVector fwd = (triple[2].cfg[a] - mid[a]) / h2;
        const FourVector back = (mid[a] - triple[0].cfg[a]) / h1;
        const FourVector accel = (fwd - back) * (2.0 / (h1 + h2));
        out.push_back(accel * m - grad_q[a]);
    }
    return out;
}

double DivergenceEstimate::normalized() const { return std::abs(divergence) / (1.0 + scale); }

namespace {

Configuration shifted(const Configuration& cfg, std::size_t a, std::size_t mu, double delta)
{
    Configuration out = cfg;
    std::array<double, 4> c = out[a].components();
    c[mu] += delta;
    out[a] = FourVector(c);
    return out;
}

}  // namespace

DivergenceEstimate conservation_residual(const WaveFunction& psi, const Configuration& cfg,
                                         std::size_t a, double h)
{
    if (!(h > 0)) {
        fail(ErrorCode::InvalidArgument, "difference step must be positive");
    }
    if (a >= psi.particles()) {
        fail(ErrorCode::IndexOutOfRange, "particle index out of range");
    }
    DivergenceEstimate est;
    for (std::size_t mu = 0; mu < 4; ++mu) {
        const FourVector jp = current(psi, shifted(cfg, a, mu, h), a);
        const FourVector jm = current(psi, shifted(cfg, a, mu, -h), a);
        const double term = (jp[mu] - jm[mu]) / (2.0 * h);
        est.divergence += term;
        est.scale += std::abs(term);
    }
    return est;
}

DivergenceEstimate continuity_residual(const WaveFunction& psi, const Configuration& cfg,
                                       double h, std::optional<double> node_threshold)
{
    if (!(h > 0)) {
        fail(ErrorCode::InvalidArgument, "difference step must be positive");
    }
    auto flux = [&](const Configuration& c, std::size_t a, std::size_t mu) {
        const PolarForm p = polar(psi, c, node_threshold);
        return p.amplitude * p.amplitude * p.phase_gradient[a][mu];
    };
    DivergenceEstimate est;
    for (std::size_t a = 0; a < psi.particles(); ++a) {
        for (std::size_t mu = 0; mu < 4; ++mu) {
            const double term =
                (flux(shifted(cfg, a, mu, h), a, mu) - flux(shifted(cfg, a, mu, -h), a, mu)) /
                (2.0 * h);
            est.divergence += term;
            est.scale += std::abs(term);
        }
    }
    return est;
}

}  // namespace kgbohm
