#include "kgbohm/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>

#include "json.hpp"
#include "kgbohm/ensemble.hpp"
#include "kgbohm/parallel.hpp"
#include "kgbohm/surface.hpp"
#include "kgbohm/verify.hpp"

#ifndef KGBOHM_VERSION
#define KGBOHM_VERSION "unknown"
#endif

namespace kgbohm {

using ojson = nlohmann::ordered_json;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::InvalidArgument, "cannot write " + path.string());
    }
    out << content;
    if (!out) {
        fail(ErrorCode::InvalidArgument, "write failed: " + path.string());
    }
}

void prepare_out_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::InvalidArgument, "cannot create " + dir.string() + ": " + ec.message());
    }
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ojson versions()
{
    return {{"kgbohm", KGBOHM_VERSION},
            {"compiler", __VERSION__},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

ojson config_echo(const ScenarioConfig& c) { return ojson::parse(dump_config(c)); }

ojson vec4(const FourVector& x) { return ojson(x.components()); }

char velocity_class(const FourVector& v)
{
    const auto& c = v.components();
    const double scale = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
    return causal_letter(causal_class(v, 1e-9 * scale));
}

IntegratorControls surface_run_controls(const IntegratorControls& c)
{
    // Runs that stop on a surface get a generous parameter budget.
    IntegratorControls out = c;
    out.s_max = std::max(c.s_max, 1e3);
    out.output_step = 0.0;
    return out;
}

ClassifyControls classify_controls(const ScenarioConfig& c, std::size_t threads)
{
    ClassifyControls k;
    k.integrator = surface_run_controls(c.integrator);
    k.integrator.law = VelocityLaw::CurrentForm;
    k.integrator.direction = +1;
    k.margin = c.classify.margin;
    k.tol_rel = c.classify.tol_rel;
    k.max_unresolved_fraction = c.classify.max_unresolved_fraction;
    k.refine_fluxes = c.classify.refine_fluxes;
    k.threads = threads;
    k.keep_connectors = false;
    return k;
}

struct SurfaceSetup {
    SurfacePatch initial;
    SurfacePatch patch;
};

SurfaceSetup surfaces_for(const ScenarioConfig& c, std::string_view command)
{
    if (c.wavefunction.particles != 1) {
        fail(ErrorCode::ConfigError, "classification is single-particle");
    }
    if (!c.initial_surface || !c.initial_patch || !c.surface || !c.patch) {
        fail(ErrorCode::ConfigError, std::string(command) +
                                         " needs initial_surface, initial_patch, surface and patch");
    }
    return {c.initial_patch->build(c.initial_surface->build()), c.patch->build(c.surface->build())};
}

ojson fluxes_json(const RegionFluxes& f)
{
    return {{"prime", f.prime},
            {"plus", f.plus},
            {"minus", f.minus},
            {"unresolved", f.unresolved},
            {"balance", f.balance()}};
}

std::string cell_coordinates(const SurfacePatch& patch, std::size_t cell)
{
    const Vec3 u = patch.cell_center(cell);
    return format_real(u[0]) + ',' + format_real(u[1]) + ',' + format_real(u[2]);
}

ojson report_json(const CheckReport& r)
{
    ojson measured = ojson::object();
    for (const auto& [k, v] : r.measured) {
        measured[k] = v;
    }
    return {{"name", r.name},         {"scenario", r.scenario},   {"pass", r.pass},
            {"tolerance", r.tolerance}, {"measured", measured}, {"runtime_s", r.runtime_s},
            {"note", r.note}};
}

}  // namespace

std::string format_real(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

Configuration parse_start(std::string_view text)
{
    auto split = [](std::string_view t, char sep) {
        std::vector<std::string_view> parts;
        std::size_t pos = 0;
        while (true) {
            const std::size_t end = t.find(sep, pos);
            parts.push_back(t.substr(pos, end == std::string_view::npos ? t.npos : end - pos));
            if (end == std::string_view::npos) {
                return parts;
            }
            pos = end + 1;
        }
    };
    Configuration cfg;
    for (std::string_view group : split(text, ';')) {
        const auto fields = split(group, ',');
        if (fields.size() != 4) {
            fail(ErrorCode::ConfigError,
                 "a start point needs four comma-separated coordinates t,x,y,z");
        }
        std::array<double, 4> c{};
        for (std::size_t k = 0; k < 4; ++k) {
            std::string_view f = fields[k];
            while (!f.empty() && f.front() == ' ') {
                f.remove_prefix(1);
            }
            while (!f.empty() && f.back() == ' ') {
                f.remove_suffix(1);
            }
            const auto r = std::from_chars(f.data(), f.data() + f.size(), c[k]);
            if (r.ec != std::errc{} || r.ptr != f.data() + f.size()) {
                fail(ErrorCode::ConfigError, "bad start coordinate '" + std::string(f) + "'");
            }
        }
        cfg.emplace_back(c);
    }
    return cfg;
}

int exit_code_for(const Error& e)
{
    switch (e.code()) {
    case ErrorCode::InitialDensityNegative:
        return ExitInitialDensity;
    case ErrorCode::TooManyUnresolved:
        return ExitUnresolved;
    default:
        return ExitConfig;
    }
}

int cmd_simulate(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log)
{
    const auto started = utc_now();
    const WaveFunction psi = config.wavefunction.build();
    const std::vector<Configuration>& starts = options.starts.empty() ? config.starts : options.starts;
    if (starts.empty()) {
        fail(ErrorCode::ConfigError, "simulate needs start points (config 'starts' or --start)");
    }
    for (std::size_t k = 0; k < starts.size(); ++k) {
        if (starts[k].size() != psi.particles()) {
            fail(ErrorCode::ConfigError, "start " + std::to_string(k) + " has " +
                                             std::to_string(starts[k].size()) +
                                             " points, expected " +
                                             std::to_string(psi.particles()));
        }
        try {
            (void)velocity_field(psi, starts[k], config.integrator.law,
                                 config.integrator.node_threshold);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NodeEncountered) {
                log << "error: start " << k << " lies on a node: " << e.what() << '\n';
                return ExitStartNode;
            }
            throw;
        }
    }

    std::vector<StopSurface> stops;
    if (config.stop_at_surface && config.surface) {
        for (std::size_t a = 0; a < psi.particles(); ++a) {
            stops.push_back({config.surface->build(), a});
        }
    }
    const std::size_t threads = resolve_threads(options.threads);
    std::vector<Trajectory> trajs(starts.size());
    parallel_for(starts.size(), threads, [&](std::size_t k) {
        trajs[k] = integrate_trajectory(psi, starts[k], config.integrator, stops);
    });

    prepare_out_dir(options.out_dir);
    const std::size_t n = psi.particles();
    ojson runs = ojson::array();
    for (std::size_t k = 0; k < trajs.size(); ++k) {
        char name[48];
        std::snprintf(name, sizeof name, "trajectory_%03zu.csv", k);
        std::string csv = "s";
        for (std::size_t a = 1; a <= n; ++a) {
            const std::string i = std::to_string(a);
            csv += ",t_" + i + ",x_" + i + ",y_" + i + ",z_" + i;
        }
        for (std::size_t a = 1; a <= n; ++a) {
            csv += ",vclass_" + std::to_string(a);
        }
        csv += '\n';
        for (const TrajectoryPoint& p : trajs[k].samples) {
            csv += format_real(p.s);
            for (const FourVector& x : p.cfg) {
                for (double c : x.components()) {
                    csv += ',' + format_real(c);
                }
            }
            for (const FourVector& v : p.velocity) {
                csv += ',';
                csv += velocity_class(v);
            }
            csv += '\n';
        }
        write_file(options.out_dir / name, csv);

        const Termination& t = trajs[k].termination;
        ojson start = ojson::array();
        for (const FourVector& x : starts[k]) {
            start.push_back(vec4(x));
        }
        ojson run = {{"file", name},
                     {"start", start},
                     {"termination", std::string(to_string(t.kind))},
                     {"s_end", t.s},
                     {"samples", trajs[k].samples.size()}};
        if (t.crossing) {
            run["crossing"] = {{"s", t.crossing->s},
                               {"point", vec4(t.crossing->point)},
                               {"direction", t.crossing->direction},
                               {"particle", t.crossing->stop_index + 1}};
        }
        if (t.kind == TerminationKind::NodeEncountered) {
            run["node_density"] = t.density;
        }
        runs.push_back(run);
        log << name << ": " << to_string(t.kind) << " at s = " << format_real(t.s) << '\n';
    }
    ojson manifest = {{"command", "simulate"},
                      {"scenario", config.name},
                      {"started_at", started},
                      {"finished_at", utc_now()},
                      {"threads", threads},
                      {"versions", versions()},
                      {"trajectories", runs},
                      {"config", config_echo(config)}};
    write_file(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return ExitOk;
}

int cmd_classify(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log)
{
    const SurfaceSetup s = surfaces_for(config, "classify");
    const WaveFunction psi = config.wavefunction.build();
    const std::size_t threads = resolve_threads(options.threads);
    const InitialDistribution dist = normalize_on_surface(psi, s.initial, config.classify.tol_rel);
    const SurfacePartition part =
        classify_patch(psi, s.patch, s.initial, classify_controls(config, threads));
    const MeasurableDistribution rho = measurable_distribution(part);

    prepare_out_dir(options.out_dir);
    const SurfacePatch& patch = part.patch;
    std::string csv = "cell,i,j,k,u1,u2,u3,t,x,y,z,density,label,reason,partner_cell\n";
    std::vector<std::optional<std::size_t>> partner(patch.cell_count());
    for (const Pairing& p : part.pairings) {
        partner[p.minus_cell] = p.plus_cell;
    }
    for (std::size_t c = 0; c < patch.cell_count(); ++c) {
        const auto ijk = patch.unflatten(c);
        const FourVector y = patch.cell_center_point(c);
        csv += std::to_string(c) + ',' + std::to_string(ijk[0]) + ',' + std::to_string(ijk[1]) +
               ',' + std::to_string(ijk[2]) + ',' + cell_coordinates(patch, c) + ',' +
               format_real(y[0]) + ',' + format_real(y[1]) + ',' + format_real(y[2]) + ',' +
               format_real(y[3]) + ',' + format_real(part.density[c]) + ',' +
               std::string(to_string(part.labels[c])) + ',' +
               std::string(to_string(part.unresolved_reason[c])) + ',' +
               (partner[c] ? std::to_string(*partner[c]) : std::string()) + '\n';
    }
    write_file(options.out_dir / "partition.csv", csv);

    std::string grid = "u1,u2,u3,density,rho,label\n";
    for (std::size_t c = 0; c < patch.cell_count(); ++c) {
        grid += cell_coordinates(patch, c) + ',' + format_real(part.density[c]) + ',' +
                format_real(rho.rho[c]) + ',' + std::string(to_string(part.labels[c])) + '\n';
    }
    write_file(options.out_dir / "rho_grid.csv", grid);

    double min_density = part.density.empty() ? 0.0 : part.density[0];
    for (double d : part.density) {
        min_density = std::min(min_density, d);
    }
    ojson summary = {
        {"scenario", config.name},
        {"cells", patch.cell_count()},
        {"counts",
         {{"prime", part.count(CellLabel::SigmaPrime)},
          {"plus", part.count(CellLabel::SigmaPlus)},
          {"minus", part.count(CellLabel::SigmaMinus)},
          {"unresolved", part.count(CellLabel::Unresolved)}}},
        {"unresolved_fraction", part.unresolved_fraction()},
        {"partners_outside", part.partners_outside},
        {"initial_window_flux", dist.normalization},
        {"initial_window_tail_flag", dist.tail_flag},
        {"min_cell_density", min_density},
        {"measurable_integral", rho.integral},
        {"cell_fluxes", fluxes_json(part.cell_fluxes)},
        {"refined_fluxes", part.refined_fluxes ? fluxes_json(*part.refined_fluxes) : ojson()},
        {"traces", part.traces}};
    write_file(options.out_dir / "summary.json", summary.dump(2) + "\n");
    log << "classified " << patch.cell_count() << " cells: " << part.count(CellLabel::SigmaPrime)
        << " prime, " << part.count(CellLabel::SigmaPlus) << " plus, "
        << part.count(CellLabel::SigmaMinus) << " minus, "
        << part.count(CellLabel::Unresolved) << " unresolved\n";
    return ExitOk;
}

int cmd_ensemble(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log)
{
    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    const SurfaceSetup s = surfaces_for(config, "ensemble");
    const WaveFunction psi = config.wavefunction.build();
    const std::size_t threads = resolve_threads(options.threads);
    const std::uint64_t seed = options.seed.value_or(config.ensemble.seed);

    const InitialDistribution dist = normalize_on_surface(psi, s.initial, config.classify.tol_rel);
    const EnsembleSamples samples =
        sample_initial(dist, config.ensemble.samples, seed, config.ensemble.law, threads);
    const EnsembleResult result = propagate_ensemble(psi, samples, s.patch,
                                                     surface_run_controls(config.integrator), threads);
    const SurfacePartition part =
        classify_patch(psi, s.patch, s.initial, classify_controls(config, threads));
    const ComparisonReport rep = compare_to_prediction(result, part, config.ensemble.buffer_cells,
                                                       config.ensemble.min_expected);

    prepare_out_dir(options.out_dir);
    std::string csv = "cell,u1,u2,u3,label,buffer,observed,expected,deviation\n";
    for (const CellComparison& c : rep.cells) {
        csv += std::to_string(c.cell) + ',' + cell_coordinates(s.patch, c.cell) + ',' +
               std::string(to_string(c.label)) + ',' + (c.buffer ? "1" : "0") + ',' +
               std::to_string(c.observed) + ',' + format_real(c.expected) + ',' +
               format_real(c.deviation) + '\n';
    }
    write_file(options.out_dir / "histogram.csv", csv);

    ojson comparison = {{"scenario", config.name},
                        {"samples", rep.samples},
                        {"seed", rep.seed},
                        {"initial_law", std::string(to_string(rep.law))},
                        {"initial_window_flux", dist.normalization},
                        {"initial_window_tail_flag", dist.tail_flag},
                        {"crossings", result.crossings.size()},
                        {"outside_patch", result.outside_patch},
                        {"escaped", result.escaped},
                        {"node_terminated", result.node_terminated},
                        {"in_prime", rep.in_prime},
                        {"in_plus", rep.in_plus},
                        {"in_minus", rep.in_minus},
                        {"in_unresolved", rep.in_unresolved},
                        {"buffer_cells", rep.buffer_cells},
                        {"band_hits", rep.band_hits},
                        {"buffer_hits", rep.buffer_hits},
                        {"min_expected", rep.min_expected},
                        {"chi_square", rep.chi_square},
                        {"dof", rep.dof},
                        {"p_value", rep.p_value},
                        {"sup_deviation", rep.sup_deviation},
                        {"zero_band_hits", rep.band_hits == 0}};
    write_file(options.out_dir / "comparison.json", comparison.dump(2) + "\n");

    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ojson manifest = {{"command", "ensemble"},
                      {"scenario", config.name},
                      {"started_at", started},
                      {"finished_at", utc_now()},
                      {"runtime_s", runtime},
                      {"threads", threads},
                      {"seed", seed},
                      {"versions", versions()},
                      {"outputs", {"histogram.csv", "comparison.json"}},
                      {"config", config_echo(config)}};
    write_file(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
    log << "ensemble of " << rep.samples << " (seed " << seed << "): " << result.crossings.size()
        << " crossings, band hits " << rep.band_hits << ", buffer hits " << rep.buffer_hits
        << ", chi-square p = " << format_real(rep.p_value) << '\n';
    return ExitOk;
}

int cmd_verify(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log)
{
    const WaveFunction psi = config.wavefunction.build();
    const VerifyConfig& v = config.verify;
    std::vector<CheckReport> reports;
    auto add = [&](std::vector<CheckReport> rs) {
        reports.insert(reports.end(), rs.begin(), rs.end());
    };

    IdentityOptions io;
    io.points = v.identity_points;
    io.seed = v.seed;
    io.box = v.box;
    io.node_threshold = config.integrator.node_threshold;
    add(run_identity_suite(psi, config.name, io));

    if (!config.starts.empty() && !v.betas.empty()) {
        CovarianceOptions co;
        co.betas = v.betas;
        co.starts = config.starts;
        co.integrator = config.integrator;
        if (v.covariance_max_step) {
            co.integrator.max_step = *v.covariance_max_step;
        }
        co.seed = v.seed;
        co.box = v.box;
        add(run_covariance_suite(psi, config.name, co));
    }
    if (v.nonrelativistic_epsilons) {
        WaveConfig unit = config.wavefunction;
        unit.momentum_scale = 1.0;
        NonrelativisticOptions no;
        no.epsilons = *v.nonrelativistic_epsilons;
        no.seed = v.seed;
        no.box = v.box;
        reports.push_back(run_nonrelativistic_limit_suite(unit.build(), config.name, no));
    }
    if (!config.starts.empty()) {
        CensusOptions cs;
        cs.starts = config.starts;
        cs.integrator = config.integrator;
        if (v.census_s_max) {
            cs.integrator.s_max = *v.census_s_max;
        }
        cs.expect = v.census;
        reports.push_back(run_superluminal_census(psi, config.name, cs));
    }
    if (v.factors.size() == 2 && psi.particles() == 2 && !config.starts.empty()) {
        FactorizationOptions fo;
        fo.starts = config.starts;
        fo.integrator = config.integrator;
        fo.seed = v.seed;
        fo.box = v.box;
        add(run_factorization_suite(std::pair{v.factors[0].build(), v.factors[1].build()}, psi,
                                    config.name, fo));
    }

    const bool pass = all_pass(reports);
    ojson checks = ojson::array();
    for (const CheckReport& r : reports) {
        checks.push_back(report_json(r));
        log << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.note.empty()) {
            log << " (" << r.note << ')';
        }
        log << '\n';
    }
    prepare_out_dir(options.out_dir);
    ojson report = {{"scenario", config.name},
                    {"pass", pass},
                    {"generated_at", utc_now()},
                    {"versions", versions()},
                    {"checks", checks}};
    write_file(options.out_dir / "report.json", report.dump(2) + "\n");
    log << config.name << ": " << (pass ? "all checks passed" : "some checks failed") << '\n';
    return pass ? ExitOk : ExitCheckFailed;
}

int run_command(std::string_view command, const std::string& config,
                const CommandOptions& options, std::ostream& out, std::ostream& err)
{
    try {
        const ScenarioConfig c = load_config(config);
        if (command == "simulate") {
            return cmd_simulate(c, options, out);
        }
        if (command == "classify") {
            return cmd_classify(c, options, out);
        }
        if (command == "ensemble") {
            return cmd_ensemble(c, options, out);
        }
        if (command == "verify") {
            return cmd_verify(c, options, out);
        }
        err << "error: unknown command '" << command << "'\n";
        return ExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace kgbohm
