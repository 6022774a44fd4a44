#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kgbohm/commands.hpp"
#include "kgbohm/config.hpp"
#include "kgbohm/surface.hpp"
#include "kgbohm/verify.hpp"

namespace py = pybind11;
using namespace kgbohm;

namespace {

using Point = std::array<double, 4>;

Configuration to_configuration(const std::vector<Point>& points)
{
    Configuration cfg;
    for (const Point& p : points) {
        cfg.emplace_back(p);
    }
    return cfg;
}

py::dict report_dict(const CheckReport& r)
{
    py::dict measured;
    for (const auto& [k, v] : r.measured) {
        measured[py::str(k)] = v;
    }
    py::dict d;
    d["name"] = r.name;
    d["scenario"] = r.scenario;
    d["pass"] = r.pass;
    d["tolerance"] = r.tolerance;
    d["measured"] = measured;
    d["note"] = r.note;
    return d;
}

}  // namespace

PYBIND11_MODULE(_kgbohm, m)
{
    m.doc() = "Bohmian trajectories for Klein-Gordon wave functions";

    static py::exception<Error> error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), e.what());
        }
    });

    py::class_<WaveFunction>(m, "WaveFunction")
        .def_static(
            "from_scenario",
            [](const std::string& name) { return load_config(name).wavefunction.build(); },
            py::arg("config"), "Wave function of a config file or builtin scenario.")
        .def_static(
            "from_json", [](const std::string& text) { return parse_config(text).wavefunction.build(); },
            py::arg("text"))
        .def_property_readonly("mass", &WaveFunction::mass)
        .def_property_readonly("particles", &WaveFunction::particles)
        .def_property_readonly("term_count", &WaveFunction::term_count)
        .def(
            "__call__",
            [](const WaveFunction& psi, const std::vector<Point>& cfg) {
                return psi.evaluate(to_configuration(cfg));
            },
            py::arg("configuration"))
        .def(
            "current",
            [](const WaveFunction& psi, const std::vector<Point>& cfg, std::size_t a) {
                return current(psi, to_configuration(cfg), a).components();
            },
            py::arg("configuration"), py::arg("particle") = 0)
        .def(
            "kg_residual",
            [](const WaveFunction& psi, const std::vector<Point>& cfg, std::size_t a) {
                return psi.kg_residual(to_configuration(cfg), a);
            },
            py::arg("configuration"), py::arg("particle") = 0);

    m.def(
        "integrate",
        [](const WaveFunction& psi, const std::vector<Point>& start, double s_max,
           const std::string& law, double rtol, double atol, double output_step) {
            IntegratorControls c;
            c.s_max = s_max;
            c.law = parse_velocity_law(law);
            c.rtol = rtol;
            c.atol = atol;
            c.output_step = output_step;
            const Trajectory t = integrate_trajectory(psi, to_configuration(start), c);
            const std::size_t n = psi.particles();
            py::array_t<double> s(static_cast<py::ssize_t>(t.samples.size()));
            py::array_t<double> x({static_cast<py::ssize_t>(t.samples.size()),
                                   static_cast<py::ssize_t>(n), py::ssize_t{4}});
            auto sv = s.mutable_unchecked<1>();
            auto xv = x.mutable_unchecked<3>();
            for (std::size_t k = 0; k < t.samples.size(); ++k) {
                sv(k) = t.samples[k].s;
                for (std::size_t a = 0; a < n; ++a) {
                    for (std::size_t mu = 0; mu < 4; ++mu) {
                        xv(k, a, mu) = t.samples[k].cfg[a][mu];
                    }
                }
            }
            py::dict out;
            out["s"] = s;
            out["x"] = x;
            out["termination"] = std::string(to_string(t.termination.kind));
            return out;
        },
        py::arg("psi"), py::arg("start"), py::arg("s_max") = 10.0,
        py::arg("law") = "current", py::arg("rtol") = 1e-9, py::arg("atol") = 1e-12,
        py::arg("output_step") = 0.0,
        "Integrates one worldline; returns s, positions x[k, particle, mu] and the termination.");

    m.def(
        "surface_density",
        [](const WaveFunction& psi, const Point& normal, double offset, const Point& y) {
            return surface_density(psi, Hypersurface(FourVector(normal), offset), FourVector(y));
        },
        py::arg("psi"), py::arg("normal"), py::arg("offset"), py::arg("point"));

    m.def(
        "identity_suite",
        [](const WaveFunction& psi, const std::string& scenario, std::size_t points) {
            IdentityOptions o;
            o.points = points;
            py::list out;
            for (const CheckReport& r : run_identity_suite(psi, scenario, o)) {
                out.append(report_dict(r));
            }
            return out;
        },
        py::arg("psi"), py::arg("scenario") = "python", py::arg("points") = 1000);

    m.def("builtin_names", &builtin_names);
    m.def(
        "scenario_json", [](const std::string& name) { return dump_config(load_config(name)); },
        py::arg("config"), "Validated scenario as JSON text.");

    m.def(
        "run_command",
        [](const std::string& command, const std::string& config, const std::string& out_dir,
           std::optional<std::uint64_t> seed, std::size_t threads) {
            CommandOptions o;
            o.out_dir = out_dir;
            o.seed = seed;
            o.threads = threads;
            std::ostringstream out, err;
            const int code = run_command(command, config, o, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("command"), py::arg("config"), py::arg("out_dir") = ".",
        py::arg("seed") = py::none(), py::arg("threads") = 0,
        "Runs simulate/classify/ensemble/verify; returns (exit code, stdout, stderr).");
}
