#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgbohm/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Bohmian trajectories for Klein-Gordon wave functions"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::vector<std::string> starts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Scenario JSON file or builtin name")->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Ensemble seed (overrides the config)");
        sub->add_option("--threads", threads,
                        "Worker threads (default: KG_BOHM_THREADS, else all cores)");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "Integrate trajectories to CSV");
    add_common(simulate);
    simulate->add_option("--start", starts,
                         "Start configuration t,x,y,z[;t,x,y,z...]; repeatable");
    add_common(app.add_subcommand("classify", "Partition the measurement patch"));
    add_common(app.add_subcommand("ensemble", "Monte Carlo ensemble against the prediction"));
    add_common(app.add_subcommand("verify", "Run the check suites of a scenario"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kgbohm::ExitConfig;
    }

    kgbohm::CommandOptions options;
    options.out_dir = out_dir;
    options.seed = seed;
    options.threads = threads;
    try {
        for (const std::string& s : starts) {
            options.starts.push_back(kgbohm::parse_start(s));
        }
    } catch (const kgbohm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kgbohm::ExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    return kgbohm::run_command(command, config, options, std::cout, std::cerr);
}
