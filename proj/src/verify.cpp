#include "kgbohm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "kgbohm/error.hpp"

namespace kgbohm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Random configuration with time coordinates in [-time_box, time_box] and
/// spatial ones in [-box, box].
Configuration random_configuration(std::mt19937_64& rng, std::size_t n, double box,
                                   double time_box)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Configuration cfg;
    for (std::size_t a = 0; a < n; ++a) {
        const double t = time_box * u(rng);
        const double x = box * u(rng), y = box * u(rng), z = box * u(rng);
        cfg.emplace_back(t, x, y, z);
    }
    return cfg;
}

double max_abs(const FourVector& v)
{
    double m = 0.0;
    for (double c : v.components()) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

double max_abs(const ComplexFourVector& v)
{
    double m = 0.0;
    for (const Complex& c : v) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

CheckReport make_report(std::string name, const std::string& scenario, double tolerance)
{
    CheckReport r;
    r.name = std::move(name);
    r.scenario = scenario;
    r.tolerance = tolerance;
    return r;
}

/// Outcome of an order-of-convergence study over several step sizes.
struct OrderStudy {
    std::vector<double> mean;  ///< mean normalized residual per step size
    double first_max = 0.0;    ///< max normalized residual at the first step
    std::size_t used = 0;
};

/// Fills measured values and the pass flag of a divergence check.
void finish_order_check(CheckReport& r, const OrderStudy& st, const IdentityOptions& o)
{
    r.measured.emplace_back("max_normalized_residual", st.first_max);
    r.measured.emplace_back("points", static_cast<double>(st.used));
    for (std::size_t k = 0; k < st.mean.size(); ++k) {
        r.measured.emplace_back("mean_residual_h" + std::to_string(k), st.mean[k]);
    }
    // Differencing round-off grows like eps/h; below that there is no order to fit.
    bool exact = true;
    for (std::size_t k = 0; k < st.mean.size(); ++k) {
        exact = exact && st.mean[k] < o.exact_floor * (1e-3 / o.steps[k]);
    }
    if (exact) {
        r.note = "residual at round-off level for every step size";
        r.pass = st.first_max < r.tolerance;
        return;
    }
    const double slope = loglog_slope(o.steps, st.mean);
    r.measured.emplace_back("order", slope);
    r.pass = st.first_max < r.tolerance && slope >= o.slope_lo && slope <= o.slope_hi;
}

}  // namespace

double CheckReport::value(const std::string& key) const
{
    for (const auto& [k, v] : measured) {
        if (k == key) {
            return v;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

bool all_pass(const std::vector<CheckReport>& reports)
{
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        fail(ErrorCode::InvalidArgument, "slope fit needs at least two matching points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<CheckReport> run_identity_suite(const WaveFunction& psi, const std::string& scenario,
                                            const IdentityOptions& o)
{
    const std::size_t n = psi.particles();
    const double node = o.node_threshold.value_or(psi.default_node_threshold());
    std::mt19937_64 rng(o.seed);
    std::vector<Configuration> cfgs;
    for (std::size_t i = 0; i < o.points; ++i) {
        cfgs.push_back(random_configuration(rng, n, o.box, o.box));
    }
    auto regular = [&](const Configuration& c) { return std::norm(psi.evaluate(c)) > 10 * node; };
    std::vector<CheckReport> out;

    {
        const auto t0 = Clock::now();
        CheckReport r = make_report("kg_residual", scenario, o.kg_tolerance);
        double worst = 0.0;
        for (const Configuration& c : cfgs) {
            const double scale = 1.0 + std::abs(psi.evaluate(c));
            for (std::size_t a = 0; a < n; ++a) {
                worst = std::max(worst, std::abs(psi.kg_residual(c, a)) / scale);
            }
        }
        r.measured = {{"max_relative_residual", worst}, {"points", double(cfgs.size())}};
        r.pass = worst < r.tolerance;
        r.runtime_s = seconds_since(t0);
        out.push_back(r);
    }

    std::vector<Configuration> div_cfgs;
    for (const Configuration& c : cfgs) {
        if (div_cfgs.size() < o.divergence_points && regular(c)) {
            div_cfgs.push_back(c);
        }
    }
    for (std::size_t a = 0; a < n; ++a) {
        const auto t0 = Clock::now();
        CheckReport r = make_report("conservation_p" + std::to_string(a + 1), scenario,
                                    o.divergence_tolerance);
        OrderStudy st;
        st.used = div_cfgs.size();
        for (std::size_t k = 0; k < o.steps.size(); ++k) {
            double sum = 0.0;
            for (const Configuration& c : div_cfgs) {
                const double v = conservation_residual(psi, c, a, o.steps[k]).normalized();
                sum += v;
                if (k == 0) {
                    st.first_max = std::max(st.first_max, v);
                }
            }
            st.mean.push_back(div_cfgs.empty() ? 0.0 : sum / double(div_cfgs.size()));
        }
        finish_order_check(r, st, o);
        r.runtime_s = seconds_since(t0);
        out.push_back(r);
    }

    {
        const auto t0 = Clock::now();
        CheckReport r = make_report("continuity", scenario, o.divergence_tolerance);
        OrderStudy st;
        st.used = div_cfgs.size();
        for (std::size_t k = 0; k < o.steps.size(); ++k) {
            double sum = 0.0;
            for (const Configuration& c : div_cfgs) {
                const double v = continuity_residual(psi, c, o.steps[k], node).normalized();
                sum += v;
                if (k == 0) {
                    st.first_max = std::max(st.first_max, v);
                }
            }
            st.mean.push_back(div_cfgs.empty() ? 0.0 : sum / double(div_cfgs.size()));
        }
        finish_order_check(r, st, o);
        r.runtime_s = seconds_since(t0);
        out.push_back(r);
    }

    {
        const auto t0 = Clock::now();
        CheckReport polar_r = make_report("polar_identity", scenario, o.polar_tolerance);
        CheckReport hj_r = make_report("hamilton_jacobi", scenario, o.hj_tolerance);
        double worst_polar = 0.0, worst_hj = 0.0;
        std::size_t used = 0, skipped = 0;
        for (const Configuration& c : cfgs) {
            if (!regular(c)) {
                ++skipped;
                continue;
            }
            ++used;
            const PolarForm p = polar(psi, c, node);
            const Complex value = psi.evaluate(c);
            for (std::size_t a = 0; a < n; ++a) {
                const FourVector j = current(psi, c, a);
                const FourVector gap = j + 2.0 * p.amplitude * p.amplitude * p.phase_gradient[a];
                const double scale = 2.0 * std::abs(value) * max_abs(psi.gradient(c, a));
                if (scale > 0.0) {
                    worst_polar = std::max(worst_polar, max_abs(gap) / scale);
                }
            }
            worst_hj = std::max(worst_hj, hamilton_jacobi_residual(psi, c, node).relative());
        }
        polar_r.measured = {{"max_relative_gap", worst_polar},
                            {"points", double(used)},
                            {"skipped_near_nodes", double(skipped)}};
        polar_r.pass = worst_polar < polar_r.tolerance;
        hj_r.measured = {{"max_relative_residual", worst_hj},
                         {"points", double(used)},
                         {"skipped_near_nodes", double(skipped)}};
        hj_r.pass = worst_hj < hj_r.tolerance;
        polar_r.runtime_s = hj_r.runtime_s = seconds_since(t0);
        out.push_back(polar_r);
        out.push_back(hj_r);
    }
    return out;
}

std::vector<CheckReport> run_covariance_suite(const WaveFunction& psi, const std::string& scenario,
                                              const CovarianceOptions& o)
{
    const double norm = std::sqrt(o.direction[0] * o.direction[0] +
                                  o.direction[1] * o.direction[1] +
                                  o.direction[2] * o.direction[2]);
    if (!(norm > 0.0)) {
        fail(ErrorCode::InvalidArgument, "boost direction must be nonzero");
    }
    std::vector<Trajectory> originals;
    for (const Configuration& c : o.starts) {
        originals.push_back(integrate_trajectory(psi, c, o.integrator));
    }
    std::mt19937_64 rng(o.seed);
    std::vector<Configuration> pts;
    for (std::size_t i = 0; i < o.current_points; ++i) {
        pts.push_back(random_configuration(rng, psi.particles(), o.box, o.box));
    }

    std::vector<CheckReport> out;
    for (double beta : o.betas) {
        const Vec3 b{beta * o.direction[0] / norm, beta * o.direction[1] / norm,
                     beta * o.direction[2] / norm};
        const LorentzTransform lambda = LorentzTransform::boost(b);
        const WaveFunction boosted = psi.transformed(lambda);

        const auto t0 = Clock::now();
        CheckReport r = make_report("boost_trajectories_beta_" + fmt(beta), scenario,
                                    o.curve_tolerance);
        double worst = 0.0;
        for (std::size_t k = 0; k < o.starts.size(); ++k) {
            Configuration moved;
            for (const FourVector& x : o.starts[k]) {
                moved.push_back(lambda(x));
            }
            const Trajectory image = transformed(originals[k], lambda);
            const Trajectory direct = integrate_trajectory(boosted, moved, o.integrator);
            worst = std::max({worst, curve_set_distance(image, direct),
                              curve_set_distance(direct, image)});
        }
        r.measured = {{"beta", beta},
                      {"max_curve_distance", worst},
                      {"starts", double(o.starts.size())}};
        r.pass = worst < r.tolerance;
        r.runtime_s = seconds_since(t0);
        out.push_back(r);

        const auto t1 = Clock::now();
        CheckReport c = make_report("boost_current_beta_" + fmt(beta), scenario,
                                    o.current_tolerance);
        double worst_j = 0.0;
        for (const Configuration& x : pts) {
            Configuration moved;
            for (const FourVector& y : x) {
                moved.push_back(lambda(y));
            }
            for (std::size_t a = 0; a < psi.particles(); ++a) {
                const FourVector expect = lambda(current(psi, x, a));
                const FourVector got = current(boosted, moved, a);
                const double scale = std::max(max_abs(expect), 1e-300);
                worst_j = std::max(worst_j, max_abs(got - expect) / scale);
            }
        }
        c.measured = {{"beta", beta}, {"max_relative_gap", worst_j}, {"points", double(pts.size())}};
        c.pass = worst_j < c.tolerance;
        c.runtime_s = seconds_since(t1);
        out.push_back(c);
    }
    return out;
}

WaveFunction scale_momenta(const WaveFunction& psi, double factor)
{
    std::vector<ModeTerm> terms;
    for (const ModeTerm& t : psi.terms()) {
        ModeTerm s{t.coefficient, {}};
        for (const Mode& m : t.modes) {
            const Vec3 p = m.momentum();
            s.modes.emplace_back(m.mass(), Vec3{p[0] * factor, p[1] * factor, p[2] * factor},
                                 m.frequency_sign());
        }
        terms.push_back(std::move(s));
    }
    return WaveFunction(psi.mass(), psi.particles(), std::move(terms), psi.symmetrized());
}

CheckReport run_nonrelativistic_limit_suite(const WaveFunction& unit_psi,
                                            const std::string& scenario,
                                            const NonrelativisticOptions& o)
{
    const auto t0 = Clock::now();
    CheckReport r = make_report("nonrelativistic_limit", scenario, o.slope_hi - o.slope_lo);
    if (o.epsilons.size() < 2) {
        fail(ErrorCode::InvalidArgument, "the limit study needs at least two scales");
    }
    const double m = unit_psi.mass();
    const std::size_t n = unit_psi.particles();
    std::vector<double> deviation;
    std::size_t negative_at_smallest = 0;
    const double eps_min = *std::min_element(o.epsilons.begin(), o.epsilons.end());
    for (double eps : o.epsilons) {
        const WaveFunction psi = scale_momenta(unit_psi, eps * m);
        // Same random stream per scale: the interference phases match up to
        // O(eps^2) because x scales as 1/eps and t as 1/eps^2.
        std::mt19937_64 rng(o.seed);
        double worst = 0.0;
        for (std::size_t i = 0; i < o.points; ++i) {
            const Configuration cfg =
                random_configuration(rng, n, o.box / eps, o.box / (eps * eps));
            const double rho = 2.0 * m * std::norm(psi.evaluate(cfg));
            for (std::size_t a = 0; a < n; ++a) {
                const double j0 = current(psi, cfg, a)[0];
                worst = std::max(worst, std::abs(j0 - rho) / rho);
                if (eps == eps_min && !(j0 > 0.0)) {
                    ++negative_at_smallest;
                }
            }
        }
        deviation.push_back(worst);
        r.measured.emplace_back("deviation_eps_" + fmt(eps), worst);
    }
    r.measured.emplace_back("nonpositive_j0_at_smallest_eps", double(negative_at_smallest));
    const bool exact =
        std::all_of(deviation.begin(), deviation.end(), [](double d) { return d < 1e-14; });
    if (exact) {
        r.note = "deviation vanishes at every scale";
        r.pass = negative_at_smallest == 0;
    } else {
        const double slope = loglog_slope(o.epsilons, deviation);
        const std::size_t k =
            std::min_element(o.epsilons.begin(), o.epsilons.end()) - o.epsilons.begin();
        r.measured.emplace_back("order", slope);
        r.measured.emplace_back("C", deviation[k] / (eps_min * eps_min));
        r.pass = slope >= o.slope_lo && slope <= o.slope_hi && negative_at_smallest == 0;
    }
    r.runtime_s = seconds_since(t0);
    return r;
}

CheckReport run_superluminal_census(const WaveFunction& psi, const std::string& scenario,
                                    const CensusOptions& o)
{
    const auto t0 = Clock::now();
    CheckReport r = make_report("superluminal_census", scenario, 0.0);
    const std::size_t n = psi.particles();
    std::vector<std::array<std::size_t, 3>> counts(n, {0, 0, 0});
    for (const Configuration& c : o.starts) {
        const Trajectory t = integrate_trajectory(psi, c, o.integrator);
        for (const TrajectoryPoint& p : t.samples) {
            for (std::size_t a = 0; a < n; ++a) {
                const FourVector& v = p.velocity[a];
                double e2 = 0.0;
                for (double x : v.components()) {
                    e2 += x * x;
                }
                ++counts[a][static_cast<std::size_t>(causal_class(v, o.lightlike_tolerance * e2))];
            }
        }
    }
    std::array<std::size_t, 3> total{0, 0, 0};
    for (std::size_t a = 0; a < n; ++a) {
        const double sum = double(counts[a][0] + counts[a][1] + counts[a][2]);
        for (std::size_t k = 0; k < 3; ++k) {
            total[k] += counts[a][k];
        }
        if (n > 1 && sum > 0) {
            const std::string p = "p" + std::to_string(a + 1) + "_";
            r.measured.emplace_back(p + "timelike_fraction", counts[a][0] / sum);
            r.measured.emplace_back(p + "lightlike_fraction", counts[a][1] / sum);
            r.measured.emplace_back(p + "spacelike_fraction", counts[a][2] / sum);
        }
    }
    const double sum = double(total[0] + total[1] + total[2]);
    const double tl = sum > 0 ? total[0] / sum : 0.0;
    const double sl = sum > 0 ? total[2] / sum : 0.0;
    r.measured.insert(r.measured.begin(), {{"timelike_fraction", tl},
                                           {"lightlike_fraction", sum > 0 ? total[1] / sum : 0.0},
                                           {"spacelike_fraction", sl},
                                           {"samples", sum}});
    switch (o.expect) {
    case CensusExpectation::None:
        r.pass = sum > 0;
        r.note = "census only";
        break;
    case CensusExpectation::AllTimelike:
        r.pass = sum > 0 && total[1] + total[2] == 0;
        break;
    case CensusExpectation::SomeSpacelike:
        r.pass = total[2] > 0;
        break;
    }
    r.runtime_s = seconds_since(t0);
    return r;
}

std::vector<CheckReport> run_factorization_suite(
    const std::optional<std::pair<WaveFunction, WaveFunction>>& product_factors,
    const std::optional<WaveFunction>& entangled, const std::string& scenario,
    const FactorizationOptions& o)
{
    std::vector<CheckReport> out;
    std::mt19937_64 rng(o.seed);

    // Largest |d/dx_2^mu (dQ/dx_1^nu)| over the scan, by central differences
    // in x_2 of the analytic gradient.
    auto mixed = [&](const WaveFunction& psi, std::vector<Configuration>& pts) {
        double worst = 0.0;
        for (const Configuration& c : pts) {
            for (std::size_t mu = 0; mu < 4; ++mu) {
                Configuration up = c, down = c;
                auto cu = c[1].components(), cd = c[1].components();
                cu[mu] += o.h;
                cd[mu] -= o.h;
                up[1] = FourVector(cu);
                down[1] = FourVector(cd);
                const FourVector gu = quantum_potential_gradient(psi, up)[0];
                const FourVector gd = quantum_potential_gradient(psi, down)[0];
                worst = std::max(worst, max_abs((gu - gd) / (2.0 * o.h)));
            }
        }
        return worst;
    };
    auto scan = [&](const WaveFunction& psi) {
        std::vector<Configuration> pts;
        const double node = psi.default_node_threshold();
        std::size_t guard = 0;
        while (pts.size() < o.scan_points && guard++ < 100 * o.scan_points) {
            Configuration c = random_configuration(rng, 2, o.box, o.box);
            if (std::norm(psi.evaluate(c)) > 1e4 * node) {
                pts.push_back(std::move(c));
            }
        }
        return pts;
    };

    if (product_factors) {
        const auto& [first, second] = *product_factors;
        if (first.particles() != 1 || second.particles() != 1) {
            fail(ErrorCode::ArityMismatch, "product factors must be single-particle");
        }
        const WaveFunction joint_psi = WaveFunction::product(first, second);
        IntegratorControls ctrl = o.integrator;
        if (!(ctrl.output_step > 0.0)) {
            ctrl.output_step = 0.05;
        }

        const auto t0 = Clock::now();
        CheckReport r = make_report("product_trajectories", scenario, o.trajectory_tolerance);
        double worst = 0.0;
        std::size_t compared = 0;
        for (const Configuration& c : o.starts) {
            const Trajectory joint = integrate_trajectory(joint_psi, c, ctrl);
            const Trajectory one = integrate_trajectory(first, {c[0]}, ctrl);
            const Trajectory two = integrate_trajectory(second, {c[1]}, ctrl);
            const std::size_t len =
                std::min({joint.samples.size(), one.samples.size(), two.samples.size()});
            for (std::size_t i = 0; i < len; ++i) {
                if (joint.samples[i].s != one.samples[i].s ||
                    joint.samples[i].s != two.samples[i].s) {
                    continue;
                }
                ++compared;
                worst = std::max({worst, max_abs(joint.samples[i].cfg[0] - one.samples[i].cfg[0]),
                                  max_abs(joint.samples[i].cfg[1] - two.samples[i].cfg[0])});
            }
        }
        r.measured = {{"max_component_gap", worst}, {"samples", double(compared)}};
        r.pass = compared > 0 && worst < r.tolerance;
        r.runtime_s = seconds_since(t0);
        out.push_back(r);

        const auto t1 = Clock::now();
        CheckReport s = make_report("product_separable_q", scenario, o.separable_tolerance);
        std::vector<Configuration> pts = scan(joint_psi);
        const double m = mixed(joint_psi, pts);
        s.measured = {{"max_mixed_derivative", m}, {"points", double(pts.size())}};
        s.pass = m < s.tolerance;
        s.runtime_s = seconds_since(t1);
        out.push_back(s);
    }

    if (entangled) {
        const WaveFunction& psi = *entangled;
        if (psi.particles() != 2) {
            fail(ErrorCode::ArityMismatch, "the entanglement witness needs two particles");
        }
        const auto t0 = Clock::now();
        std::vector<Configuration> pts = scan(psi);
        CheckReport w = make_report("entangled_q_witness", scenario, o.witness_threshold);
        const double m = mixed(psi, pts);
        w.measured = {{"max_mixed_derivative", m}, {"points", double(pts.size())}};
        w.pass = m > w.tolerance;
        w.runtime_s = seconds_since(t0);
        out.push_back(w);

        const auto t1 = Clock::now();
        CheckReport v = make_report("entangled_velocity_dependence", scenario,
                                    o.velocity_threshold);
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
            const Configuration a = pts[i];
            Configuration b = a;
            b[1] = pts[i + 1][1];
            if (std::norm(psi.evaluate(b)) <= 1e4 * psi.default_node_threshold()) {
                continue;
            }
            const FourVector va = velocity_field(psi, a, VelocityLaw::CurrentForm)[0];
            const FourVector vb = velocity_field(psi, b, VelocityLaw::CurrentForm)[0];
            worst = std::max(worst, max_abs(va - vb));
        }
        v.measured = {{"max_velocity_change", worst}};
        v.pass = worst > v.tolerance;
        v.runtime_s = seconds_since(t1);
        out.push_back(v);
    }
    return out;
}

}  // namespace kgbohm
