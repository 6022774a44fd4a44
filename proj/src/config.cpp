#include "kgbohm/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "kgbohm/error.hpp"

namespace kgbohm {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg)
{
    fail(ErrorCode::ConfigError, (path.empty() ? "/" : path) + ": " + msg);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys)
{
    if (!j.is_object()) {
        bad(path, "expected an object");
    }
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            bad(path + "/" + k, "unknown field");
        }
    }
}

const json& need(const json& j, const std::string& path, const std::string& key)
{
    if (!j.contains(key)) {
        bad(path + "/" + key, "missing required field");
    }
    return j.at(key);
}

double number(const json& j, const std::string& path)
{
    if (!j.is_number()) {
        bad(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        bad(path, "expected a finite number");
    }
    return v;
}

double positive(const json& j, const std::string& path)
{
    const double v = number(j, path);
    if (!(v > 0.0)) {
        bad(path, "must be positive");
    }
    return v;
}

std::uint64_t count(const json& j, const std::string& path)
{
    if (!j.is_number_unsigned()) {
        bad(path, "expected a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

bool boolean(const json& j, const std::string& path)
{
    if (!j.is_boolean()) {
        bad(path, "expected true or false");
    }
    return j.get<bool>();
}

std::string text(const json& j, const std::string& path)
{
    if (!j.is_string()) {
        bad(path, "expected a string");
    }
    return j.get<std::string>();
}

template <std::size_t N>
std::array<double, N> numbers(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != N) {
        bad(path, "expected an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = number(j[i], path + "/" + std::to_string(i));
    }
    return out;
}

std::vector<double> number_list(const json& j, const std::string& path)
{
    if (!j.is_array()) {
        bad(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(number(j[i], path + "/" + std::to_string(i)));
    }
    return out;
}

int frequency_sign(const json& j, const std::string& path)
{
    if (!j.is_number_integer() || (j.get<int>() != 1 && j.get<int>() != -1)) {
        bad(path, "must be 1 or -1");
    }
    return j.get<int>();
}

template <typename F>
void optional_field(const json& j, const std::string& path, const std::string& key, F&& read)
{
    if (j.contains(key)) {
        read(j.at(key), path + "/" + key);
    }
}

std::string_view census_name(CensusExpectation e)
{
    switch (e) {
    case CensusExpectation::None:
        return "none";
    case CensusExpectation::AllTimelike:
        return "all_timelike";
    case CensusExpectation::SomeSpacelike:
        return "some_spacelike";
    }
    return "none";
}

WaveConfig read_wave(const json& j, const std::string& path)
{
    only_keys(j, path,
              {"mass", "particles", "terms", "packet", "symmetrize", "momentum_scale", "boost"});
    WaveConfig w;
    w.mass = positive(need(j, path, "mass"), path + "/mass");
    optional_field(j, path, "particles", [&](const json& v, const std::string& p) {
        w.particles = count(v, p);
        if (w.particles < 1) {
            bad(p, "must be at least 1");
        }
    });
    if (j.contains("terms") == j.contains("packet")) {
        bad(path, "give exactly one of 'terms' and 'packet'");
    }
    optional_field(j, path, "terms", [&](const json& v, const std::string& p) {
        if (!v.is_array() || v.empty()) {
            bad(p, "expected a nonempty array of terms");
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            const std::string tp = p + "/" + std::to_string(k);
            only_keys(v[k], tp, {"coefficient", "momenta"});
            TermConfig t;
            const auto c = numbers<2>(need(v[k], tp, "coefficient"), tp + "/coefficient");
            t.re = c[0];
            t.im = c[1];
            const json& ms = need(v[k], tp, "momenta");
            if (!ms.is_array() || ms.size() != w.particles) {
                bad(tp + "/momenta", "expected one momentum per particle (" +
                                         std::to_string(w.particles) + ")");
            }
            for (std::size_t a = 0; a < ms.size(); ++a) {
                const std::string mp = tp + "/momenta/" + std::to_string(a);
                only_keys(ms[a], mp, {"p", "sign", "energy"});
                MomentumConfig m;
                m.momentum = numbers<3>(need(ms[a], mp, "p"), mp + "/p");
                optional_field(ms[a], mp, "sign", [&](const json& s, const std::string& sp) {
                    m.sign = frequency_sign(s, sp);
                });
                optional_field(ms[a], mp, "energy", [&](const json& e, const std::string& ep) {
                    m.energy = number(e, ep);
                });
                t.momenta.push_back(m);
            }
            w.terms.push_back(std::move(t));
        }
    });
    optional_field(j, path, "packet", [&](const json& v, const std::string& p) {
        only_keys(v, p, {"center", "width", "points_per_axis", "extent_sigmas", "sign"});
        PacketConfig pk;
        pk.center = numbers<3>(need(v, p, "center"), p + "/center");
        pk.width = numbers<3>(need(v, p, "width"), p + "/width");
        for (std::size_t i = 0; i < 3; ++i) {
            if (pk.width[i] < 0) {
                bad(p + "/width", "widths must be nonnegative");
            }
        }
        optional_field(v, p, "points_per_axis", [&](const json& x, const std::string& xp) {
            pk.points_per_axis = static_cast<int>(count(x, xp));
            if (pk.points_per_axis < 1) {
                bad(xp, "must be at least 1");
            }
        });
        optional_field(v, p, "extent_sigmas", [&](const json& x, const std::string& xp) {
            pk.extent_sigmas = positive(x, xp);
        });
        optional_field(v, p, "sign",
                       [&](const json& x, const std::string& xp) { pk.sign = frequency_sign(x, xp); });
        w.packet = pk;
    });
    optional_field(j, path, "symmetrize",
                   [&](const json& v, const std::string& p) { w.symmetrize = boolean(v, p); });
    optional_field(j, path, "momentum_scale", [&](const json& v, const std::string& p) {
        w.momentum_scale = number(v, p);
    });
    optional_field(j, path, "boost",
                   [&](const json& v, const std::string& p) { w.boost = numbers<3>(v, p); });
    try {
        (void)w.build();
    } catch (const Error& e) {
        bad(path, e.what());
    }
    return w;
}

SurfaceConfig read_surface(const json& j, const std::string& path)
{
    only_keys(j, path, {"normal", "offset", "time", "velocity"});
    SurfaceConfig s;
    try {
        if (j.contains("time")) {
            if (j.contains("normal") || j.contains("velocity") || j.contains("offset")) {
                bad(path, "'time' excludes 'normal', 'velocity' and 'offset'");
            }
            s = SurfaceConfig::from(Hypersurface::at_time(number(j.at("time"), path + "/time")));
        } else if (j.contains("velocity")) {
            if (j.contains("normal")) {
                bad(path, "give only one of 'normal' and 'velocity'");
            }
            const auto b = numbers<3>(j.at("velocity"), path + "/velocity");
            const double off =
                j.contains("offset") ? number(j.at("offset"), path + "/offset") : 0.0;
            s = SurfaceConfig::from(Hypersurface::with_velocity({b[0], b[1], b[2]}, off));
        } else {
            s.normal = numbers<4>(need(j, path, "normal"), path + "/normal");
            s.offset = j.contains("offset") ? number(j.at("offset"), path + "/offset") : 0.0;
            (void)s.build();
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) {
            throw;
        }
        bad(path, e.what());
    }
    return s;
}

PatchConfig read_patch(const json& j, const std::string& path)
{
    only_keys(j, path, {"bounds", "cells"});
    PatchConfig p;
    const json& b = need(j, path, "bounds");
    if (!b.is_array() || b.size() != 3) {
        bad(path + "/bounds", "expected three [lo, hi] pairs");
    }
    for (std::size_t a = 0; a < 3; ++a) {
        const auto r = numbers<2>(b[a], path + "/bounds/" + std::to_string(a));
        p.bounds[a] = {r[0], r[1]};
    }
    const json& c = need(j, path, "cells");
    if (!c.is_array() || c.size() != 3) {
        bad(path + "/cells", "expected three cell counts");
    }
    for (std::size_t a = 0; a < 3; ++a) {
        p.cells[a] = count(c[a], path + "/cells/" + std::to_string(a));
    }
    try {
        (void)p.build(Hypersurface::at_time(0.0));
    } catch (const Error& e) {
        bad(path, e.what());
    }
    return p;
}

IntegratorControls read_integrator(const json& j, const std::string& path)
{
    only_keys(j, path,
              {"rtol", "atol", "max_step", "min_step", "s_max", "law", "direction",
               "output_step", "node_threshold", "max_steps"});
    IntegratorControls c;
    optional_field(j, path, "rtol", [&](const json& v, const std::string& p) { c.rtol = positive(v, p); });
    optional_field(j, path, "atol", [&](const json& v, const std::string& p) { c.atol = positive(v, p); });
    optional_field(j, path, "max_step",
                   [&](const json& v, const std::string& p) { c.max_step = positive(v, p); });
    optional_field(j, path, "min_step",
                   [&](const json& v, const std::string& p) { c.min_step = positive(v, p); });
    optional_field(j, path, "s_max", [&](const json& v, const std::string& p) { c.s_max = positive(v, p); });
    optional_field(j, path, "direction",
                   [&](const json& v, const std::string& p) { c.direction = frequency_sign(v, p); });
    optional_field(j, path, "output_step", [&](const json& v, const std::string& p) {
        c.output_step = number(v, p);
        if (c.output_step < 0) {
            bad(p, "must be nonnegative");
        }
    });
    optional_field(j, path, "node_threshold",
                   [&](const json& v, const std::string& p) { c.node_threshold = positive(v, p); });
    optional_field(j, path, "max_steps", [&](const json& v, const std::string& p) {
        c.max_steps = count(v, p);
        if (c.max_steps < 1) {
            bad(p, "must be at least 1");
        }
    });
    optional_field(j, path, "law", [&](const json& v, const std::string& p) {
        try {
            c.law = parse_velocity_law(text(v, p));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ConfigError) {
                throw;
            }
            bad(p, e.what());
        }
    });
    if (c.min_step > c.max_step) {
        bad(path + "/min_step", "must not exceed max_step");
    }
    return c;
}

Configuration read_start(const json& j, const std::string& path, std::size_t particles)
{
    if (!j.is_array() || j.size() != particles) {
        bad(path, "expected one four-vector per particle (" + std::to_string(particles) + ")");
    }
    Configuration cfg;
    for (std::size_t a = 0; a < particles; ++a) {
        cfg.emplace_back(numbers<4>(j[a], path + "/" + std::to_string(a)));
    }
    return cfg;
}

ojson write_wave(const WaveConfig& w)
{
    ojson j;
    j["mass"] = w.mass;
    j["particles"] = w.particles;
    if (w.packet) {
        j["packet"] = {{"center", w.packet->center},
                       {"width", w.packet->width},
                       {"points_per_axis", w.packet->points_per_axis},
                       {"extent_sigmas", w.packet->extent_sigmas},
                       {"sign", w.packet->sign}};
    } else {
        ojson terms = ojson::array();
        for (const TermConfig& t : w.terms) {
            ojson ms = ojson::array();
            for (const MomentumConfig& m : t.momenta) {
                ojson mj = {{"p", m.momentum}, {"sign", m.sign}};
                if (m.energy) {
                    mj["energy"] = *m.energy;
                }
                ms.push_back(mj);
            }
            terms.push_back({{"coefficient", {t.re, t.im}}, {"momenta", ms}});
        }
        j["terms"] = terms;
    }
    j["symmetrize"] = w.symmetrize;
    j["momentum_scale"] = w.momentum_scale;
    j["boost"] = w.boost;
    return j;
}

ojson write_patch(const PatchConfig& p)
{
    ojson b = ojson::array();
    for (const AxisRange& r : p.bounds) {
        b.push_back({r.lo, r.hi});
    }
    return {{"bounds", b}, {"cells", p.cells}};
}

}  // namespace

WaveFunction WaveConfig::build() const
{
    auto scaled = [&](const Vec3& p) {
        return Vec3{p[0] * momentum_scale, p[1] * momentum_scale, p[2] * momentum_scale};
    };
    std::vector<ModeTerm> built;
    for (const TermConfig& t : terms) {
        ModeTerm mt{Complex(t.re, t.im), {}};
        for (const MomentumConfig& m : t.momenta) {
            if (m.energy) {
                mt.modes.push_back(Mode::off_shell(mass, scaled(m.momentum), *m.energy));
            } else {
                mt.modes.emplace_back(mass, scaled(m.momentum), m.sign);
            }
        }
        built.push_back(std::move(mt));
    }
    if (packet) {
        GaussianPacketSpec g;
        g.center = packet->center;
        g.width = packet->width;
        g.points_per_axis = packet->points_per_axis;
        g.extent_sigmas = packet->extent_sigmas;
        g.frequency_sign = packet->sign;
        for (const TermSpec& s : gaussian_packet_terms(g, particles)) {
            ModeTerm mt{s.coefficient, {}};
            for (const MomentumSpec& m : s.momenta) {
                mt.modes.emplace_back(mass, scaled(m.momentum), m.frequency_sign);
            }
            built.push_back(std::move(mt));
        }
    }
    WaveFunction psi(mass, particles, std::move(built));
    if (symmetrize) {
        psi = kgbohm::symmetrize(psi);
    }
    if (boost != Vec3{}) {
        psi = psi.transformed(LorentzTransform::boost(boost));
    }
    return psi;
}

Hypersurface SurfaceConfig::build() const
{
    return Hypersurface(FourVector(normal), offset);
}

SurfaceConfig SurfaceConfig::from(const Hypersurface& s)
{
    return SurfaceConfig{s.normal().components(), s.offset()};
}

SurfacePatch PatchConfig::build(const Hypersurface& sigma) const
{
    return SurfacePatch(sigma, bounds, cells);
}

ScenarioConfig parse_config(std::string_view input)
{
    json j;
    try {
        j = json::parse(input);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, column = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, input.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (input[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        fail(ErrorCode::ConfigError, "syntax error at line " + std::to_string(line) + ", column " +
                                         std::to_string(column) + ": " + e.what());
    }
    only_keys(j, "",
              {"name", "wavefunction", "initial_surface", "initial_patch", "surface", "patch",
               "integrator", "stop_at_surface", "classify", "ensemble", "verify", "starts"});
    ScenarioConfig c;
    optional_field(j, "", "name", [&](const json& v, const std::string& p) { c.name = text(v, p); });
    c.wavefunction = read_wave(need(j, "", "wavefunction"), "/wavefunction");
    optional_field(j, "", "initial_surface", [&](const json& v, const std::string& p) {
        c.initial_surface = read_surface(v, p);
    });
    optional_field(j, "", "surface",
                   [&](const json& v, const std::string& p) { c.surface = read_surface(v, p); });
    optional_field(j, "", "initial_patch", [&](const json& v, const std::string& p) {
        if (!c.initial_surface) {
            bad(p, "needs initial_surface");
        }
        c.initial_patch = read_patch(v, p);
    });
    optional_field(j, "", "patch", [&](const json& v, const std::string& p) {
        if (!c.surface) {
            bad(p, "needs surface");
        }
        c.patch = read_patch(v, p);
    });
    optional_field(j, "", "integrator",
                   [&](const json& v, const std::string& p) { c.integrator = read_integrator(v, p); });
    optional_field(j, "", "stop_at_surface",
                   [&](const json& v, const std::string& p) { c.stop_at_surface = boolean(v, p); });
    optional_field(j, "", "classify", [&](const json& v, const std::string& p) {
        only_keys(v, p, {"margin", "tol_rel", "max_unresolved_fraction", "refine_fluxes"});
        optional_field(v, p, "margin", [&](const json& x, const std::string& xp) {
            c.classify.margin = number(x, xp);
            if (c.classify.margin < 1.0) {
                bad(xp, "must be at least 1");
            }
        });
        optional_field(v, p, "tol_rel", [&](const json& x, const std::string& xp) {
            c.classify.tol_rel = positive(x, xp);
        });
        optional_field(v, p, "max_unresolved_fraction", [&](const json& x, const std::string& xp) {
            c.classify.max_unresolved_fraction = number(x, xp);
            if (c.classify.max_unresolved_fraction < 0 || c.classify.max_unresolved_fraction > 1) {
                bad(xp, "must lie in [0, 1]");
            }
        });
        optional_field(v, p, "refine_fluxes", [&](const json& x, const std::string& xp) {
            c.classify.refine_fluxes = boolean(x, xp);
        });
    });
    optional_field(j, "", "ensemble", [&](const json& v, const std::string& p) {
        only_keys(v, p, {"samples", "seed", "initial_law", "buffer_cells", "min_expected"});
        optional_field(v, p, "samples", [&](const json& x, const std::string& xp) {
            c.ensemble.samples = count(x, xp);
            if (c.ensemble.samples < 1) {
                bad(xp, "must be at least 1");
            }
        });
        optional_field(v, p, "seed",
                       [&](const json& x, const std::string& xp) { c.ensemble.seed = count(x, xp); });
        optional_field(v, p, "initial_law", [&](const json& x, const std::string& xp) {
            const std::string s = text(x, xp);
            if (s != "current" && s != "uniform") {
                bad(xp, "expected 'current' or 'uniform'");
            }
            c.ensemble.law = parse_initial_law(s);
        });
        optional_field(v, p, "buffer_cells", [&](const json& x, const std::string& xp) {
            c.ensemble.buffer_cells = count(x, xp);
        });
        optional_field(v, p, "min_expected", [&](const json& x, const std::string& xp) {
            c.ensemble.min_expected = positive(x, xp);
        });
    });
    optional_field(j, "", "verify", [&](const json& v, const std::string& p) {
        only_keys(v, p,
                  {"identity_points", "seed", "box", "betas", "covariance_max_step",
                   "nonrelativistic_epsilons", "census", "census_s_max", "factors"});
        VerifyConfig& vc = c.verify;
        optional_field(v, p, "identity_points", [&](const json& x, const std::string& xp) {
            vc.identity_points = count(x, xp);
        });
        optional_field(v, p, "seed", [&](const json& x, const std::string& xp) { vc.seed = count(x, xp); });
        optional_field(v, p, "box", [&](const json& x, const std::string& xp) { vc.box = positive(x, xp); });
        optional_field(v, p, "betas", [&](const json& x, const std::string& xp) {
            vc.betas = number_list(x, xp);
            for (double b : vc.betas) {
                if (!(std::abs(b) < 1.0)) {
                    bad(xp, "boost speeds must be below 1");
                }
            }
        });
        optional_field(v, p, "covariance_max_step", [&](const json& x, const std::string& xp) {
            vc.covariance_max_step = positive(x, xp);
        });
        optional_field(v, p, "nonrelativistic_epsilons", [&](const json& x, const std::string& xp) {
            vc.nonrelativistic_epsilons = number_list(x, xp);
            if (vc.nonrelativistic_epsilons->size() < 2) {
                bad(xp, "needs at least two scales");
            }
            for (double e : *vc.nonrelativistic_epsilons) {
                if (!(e > 0.0 && e <= 0.1)) {
                    bad(xp, "scales must lie in (0, 0.1]");
                }
            }
        });
        optional_field(v, p, "census", [&](const json& x, const std::string& xp) {
            const std::string s = text(x, xp);
            if (s == "none") {
                vc.census = CensusExpectation::None;
            } else if (s == "all_timelike") {
                vc.census = CensusExpectation::AllTimelike;
            } else if (s == "some_spacelike") {
                vc.census = CensusExpectation::SomeSpacelike;
            } else {
                bad(xp, "expected 'none', 'all_timelike' or 'some_spacelike'");
            }
        });
        optional_field(v, p, "census_s_max", [&](const json& x, const std::string& xp) {
            vc.census_s_max = positive(x, xp);
        });
        optional_field(v, p, "factors", [&](const json& x, const std::string& xp) {
            if (!x.is_array() || x.size() != 2) {
                bad(xp, "expected two single-particle wave functions");
            }
            for (std::size_t k = 0; k < 2; ++k) {
                WaveConfig w = read_wave(x[k], xp + "/" + std::to_string(k));
                if (w.particles != 1) {
                    bad(xp + "/" + std::to_string(k), "factors must be single-particle");
                }
                vc.factors.push_back(std::move(w));
            }
        });
    });
    optional_field(j, "", "starts", [&](const json& v, const std::string& p) {
        if (!v.is_array()) {
            bad(p, "expected an array of configurations");
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            c.starts.push_back(
                read_start(v[k], p + "/" + std::to_string(k), c.wavefunction.particles));
        }
    });
    return c;
}

std::string dump_config(const ScenarioConfig& c)
{
    ojson j;
    j["name"] = c.name;
    j["wavefunction"] = write_wave(c.wavefunction);
    if (c.initial_surface) {
        j["initial_surface"] = {{"normal", c.initial_surface->normal},
                                {"offset", c.initial_surface->offset}};
    }
    if (c.initial_patch) {
        j["initial_patch"] = write_patch(*c.initial_patch);
    }
    if (c.surface) {
        j["surface"] = {{"normal", c.surface->normal}, {"offset", c.surface->offset}};
    }
    if (c.patch) {
        j["patch"] = write_patch(*c.patch);
    }
    ojson ij = {{"rtol", c.integrator.rtol},         {"atol", c.integrator.atol},
               {"max_step", c.integrator.max_step}, {"min_step", c.integrator.min_step},
               {"s_max", c.integrator.s_max},       {"law", to_string(c.integrator.law)},
               {"direction", c.integrator.direction},
               {"output_step", c.integrator.output_step},
               {"max_steps", c.integrator.max_steps}};
    if (c.integrator.node_threshold) {
        ij["node_threshold"] = *c.integrator.node_threshold;
    }
    j["integrator"] = ij;
    j["stop_at_surface"] = c.stop_at_surface;
    j["classify"] = {{"margin", c.classify.margin},
                     {"tol_rel", c.classify.tol_rel},
                     {"max_unresolved_fraction", c.classify.max_unresolved_fraction},
                     {"refine_fluxes", c.classify.refine_fluxes}};
    j["ensemble"] = {{"samples", c.ensemble.samples},
                     {"seed", c.ensemble.seed},
                     {"initial_law", to_string(c.ensemble.law)},
                     {"buffer_cells", c.ensemble.buffer_cells},
                     {"min_expected", c.ensemble.min_expected}};
    ojson vj = {{"identity_points", c.verify.identity_points},
               {"seed", c.verify.seed},
               {"box", c.verify.box},
               {"betas", c.verify.betas},
               {"census", census_name(c.verify.census)}};
    if (c.verify.covariance_max_step) {
        vj["covariance_max_step"] = *c.verify.covariance_max_step;
    }
    if (c.verify.nonrelativistic_epsilons) {
        vj["nonrelativistic_epsilons"] = *c.verify.nonrelativistic_epsilons;
    }
    if (c.verify.census_s_max) {
        vj["census_s_max"] = *c.verify.census_s_max;
    }
    if (!c.verify.factors.empty()) {
        ojson f = ojson::array();
        for (const WaveConfig& w : c.verify.factors) {
            f.push_back(write_wave(w));
        }
        vj["factors"] = f;
    }
    j["verify"] = vj;
    ojson starts = ojson::array();
    for (const Configuration& cfg : c.starts) {
        ojson s = ojson::array();
        for (const FourVector& x : cfg) {
            s.push_back(x.components());
        }
        starts.push_back(s);
    }
    j["starts"] = starts;
    return j.dump(2) + "\n";
}

ScenarioConfig load_config(const std::string& path_or_name)
{
    constexpr std::string_view prefix = "builtin:";
    if (path_or_name.starts_with(prefix)) {
        return builtin_scenario(path_or_name.substr(prefix.size()));
    }
    std::error_code ec;
    if (!std::filesystem::exists(path_or_name, ec)) {
        const std::vector<std::string> names = builtin_names();
        if (std::find(names.begin(), names.end(), path_or_name) != names.end()) {
            return builtin_scenario(path_or_name);
        }
        fail(ErrorCode::ConfigError, "no such config file or builtin scenario: " + path_or_name);
    }
    std::ifstream in(path_or_name, std::ios::binary);
    if (!in) {
        fail(ErrorCode::ConfigError, "cannot read " + path_or_name);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

WaveConfig single(std::vector<std::pair<double, Vec3>> terms)
{
    WaveConfig w;
    for (const auto& [c, p] : terms) {
        w.terms.push_back(TermConfig{c, 0.0, {MomentumConfig{p, +1, std::nullopt}}});
    }
    return w;
}

PatchConfig line_patch(double lo, double hi, std::size_t cells)
{
    PatchConfig p;
    p.bounds = {AxisRange{lo, hi}, AxisRange{}, AxisRange{}};
    p.cells = {cells, 1, 1};
    return p;
}

std::vector<Configuration> line_starts(double y = 0.1)
{
    std::vector<Configuration> s;
    for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        s.push_back({FourVector(0, x, y, 0)});
    }
    return s;
}

ScenarioConfig planewave()
{
    ScenarioConfig c;
    c.name = "planewave";
    c.wavefunction = single({{1.0, {1, 0, 0}}});
    c.initial_surface = SurfaceConfig{};
    c.initial_patch = line_patch(0.0, 1.0, 10);
    // x advances by t p / E = 2 / sqrt 2 by t = 2.
    c.surface = SurfaceConfig::from(Hypersurface::at_time(2.0));
    c.patch = line_patch(std::sqrt(2.0), 1.0 + std::sqrt(2.0), 20);
    c.ensemble.samples = 100000;
    c.ensemble.seed = 1;
    c.verify.census = CensusExpectation::AllTimelike;
    c.starts = line_starts();
    c.starts.insert(c.starts.begin(), Configuration{FourVector(0, 0, 0, 0)});
    return c;
}

ScenarioConfig two_mode()
{
    ScenarioConfig c;
    c.name = "two-mode-neg-density";
    c.wavefunction = single({{1.0, {1, 0, 0}}, {0.5, {5, 0, 0}}});
    // Rest frame of the mean of the two mode velocities: j.n0 >= 2E(1 - 0.5)^2 there.
    const double beta = (std::sqrt(26.0) - std::sqrt(2.0)) / 4.0;
    c.initial_surface = SurfaceConfig::from(Hypersurface::with_velocity({beta, 0, 0}, 0.0));
    c.initial_patch = line_patch(-4.3, -3.1, 120);
    c.surface = SurfaceConfig::from(Hypersurface::at_time(4.0));
    c.patch = line_patch(0.8, 1.8, 100);
    c.integrator.s_max = 5.0;
    c.classify.margin = 30.0;
    c.ensemble.samples = 10000;
    c.ensemble.seed = 7;
    c.verify.covariance_max_step = 0.01;
    c.verify.census = CensusExpectation::SomeSpacelike;
    c.verify.census_s_max = 20.0;
    c.starts = line_starts();
    return c;
}

ScenarioConfig nonrel_packet()
{
    ScenarioConfig c;
    c.name = "nonrel-packet";
    c.wavefunction = single({{1.0, {1, 0, 0}}, {0.5, {-0.6, 0.5, 0}}});
    c.wavefunction.momentum_scale = 0.01;
    c.verify.nonrelativistic_epsilons = std::vector<double>{0.1, 0.03, 0.01};
    c.starts = line_starts();
    return c;
}

ScenarioConfig entangled_pair()
{
    ScenarioConfig c;
    c.name = "entangled-pair";
    c.wavefunction.particles = 2;
    c.wavefunction.symmetrize = true;
    const Vec3 pa{0.4, 0.1, 0}, pb{-0.3, 0.5, 0.2}, pc{0.9, -0.2, 0.1};
    c.wavefunction.terms = {
        TermConfig{1.0, 0.0, {MomentumConfig{pa, +1, {}}, MomentumConfig{pb, +1, {}}}},
        TermConfig{0.3, 0.4, {MomentumConfig{pc, +1, {}}, MomentumConfig{pa, +1, {}}}}};
    c.integrator.s_max = 5.0;
    c.integrator.rtol = 1e-11;
    c.integrator.atol = 1e-13;
    c.verify.identity_points = 300;
    c.verify.factors = {two_mode().wavefunction, two_mode().wavefunction};
    c.starts = {{FourVector(0, 0.3, 0, 0), FourVector(0, -0.4, 0.2, 0)},
                {FourVector(0, 1, 0, 0), FourVector(0.5, 0, 0, 1)}};
    return c;
}

SurfaceConfig boosted(const SurfaceConfig& s, const LorentzTransform& L)
{
    return SurfaceConfig{L(FourVector(s.normal)).components(), s.offset};
}

ScenarioConfig boosted_variant(ScenarioConfig c, const std::string& name)
{
    const Vec3 beta{0.6, 0, 0};
    const LorentzTransform L = LorentzTransform::boost(beta);
    c.name = name;
    c.wavefunction.boost = beta;
    // Boosts along one axis compose to a pure boost, so patch coordinates carry over.
    if (c.initial_surface) {
        c.initial_surface = boosted(*c.initial_surface, L);
    }
    if (c.surface) {
        c.surface = boosted(*c.surface, L);
    }
    for (Configuration& cfg : c.starts) {
        for (FourVector& x : cfg) {
            x = L(x);
        }
    }
    c.verify.census = CensusExpectation::None;
    return c;
}

ScenarioConfig offshell_fixture()
{
    ScenarioConfig c;
    c.name = "offshell-fixture";
    c.wavefunction.terms = {TermConfig{1.0, 0.0, {MomentumConfig{{1, 0, 0}, +1, 1.0}}}};
    c.verify.identity_points = 50;
    return c;
}

}  // namespace

std::vector<std::string> builtin_names()
{
    return {"planewave",         "two-mode-neg-density", "nonrel-packet",   "entangled-pair",
            "planewave-boosted", "two-mode-boosted",     "offshell-fixture"};
}

ScenarioConfig builtin_scenario(std::string_view name)
{
    if (name == "planewave") {
        return planewave();
    }
    if (name == "two-mode-neg-density") {
        return two_mode();
    }
    if (name == "nonrel-packet") {
        return nonrel_packet();
    }
    if (name == "entangled-pair") {
        return entangled_pair();
    }
    if (name == "planewave-boosted") {
        return boosted_variant(planewave(), "planewave-boosted");
    }
    if (name == "two-mode-boosted") {
        return boosted_variant(two_mode(), "two-mode-boosted");
    }
    if (name == "offshell-fixture") {
        return offshell_fixture();
    }
    fail(ErrorCode::ConfigError, "unknown builtin scenario '" + std::string(name) + "'");
}

}  // namespace kgbohm
