#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "topnav/commands.hpp"
#include "topnav/config.hpp"
#include "topnav/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::string model;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string cached_sweep;
};

void add_common(CLI::App* cmd, Flags& f, bool sweep_cache) {
    cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--model", f.model, "model defaults to use without a config (lorenz, rossler, magnetic_pendulum)");
    cmd->add_option("--out", f.out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", f.seed, "random seed (overrides seed)");
    cmd->add_option("--workers", f.workers, "worker threads for sweeps (overrides workers)");
    if (sweep_cache)
        cmd->add_option("--cached-sweep", f.cached_sweep, "sweep.json used as the feature oracle")
            ->check(CLI::ExistingFile);
}

topnav::RunConfig load(const Flags& f) {
    if (!f.config.empty() && !f.model.empty()) throw topnav::InputError("give either --config or --model, not both");
    if (f.config.empty() && f.model.empty()) throw topnav::InputError("--config or --model is required");
    topnav::RunConfig cfg =
        f.config.empty() ? topnav::default_config(f.model) : topnav::parse_config(topnav::read_file(f.config));
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.workers) cfg.workers = *f.workers;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topological navigation of dynamical-system parameter spaces"};
    app.require_subcommand(1);

    Flags f;
    auto* simulate = app.add_subcommand("simulate", "one forward pass: trajectory, diagram, features");
    auto* sweep = app.add_subcommand("sweep", "feature grids over two parameters");
    auto* navigate = app.add_subcommand("navigate", "gradient descent or derivative-free path");
    auto* check = app.add_subcommand("check-grad", "adjoint gradient against finite differences");
    auto* plot = app.add_subcommand("plot", "re-render the plots of an output directory");
    add_common(simulate, f, false);
    add_common(sweep, f, false);
    add_common(navigate, f, true);
    add_common(check, f, false);
    plot->add_option("--out", f.out, "output directory holding sweep.json, path.json or diagram.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (plot->parsed()) {
            topnav::cmd_plot(f.out, std::cout);
            return 0;
        }
        const topnav::RunConfig cfg = load(f);
        const fs::path out = cfg.output_dir;
        if (simulate->parsed()) {
            topnav::cmd_simulate(cfg, out, std::cout);
        } else if (sweep->parsed()) {
            topnav::cmd_sweep(cfg, out, std::cout);
        } else if (navigate->parsed()) {
            std::optional<fs::path> cache;
            if (!f.cached_sweep.empty()) cache = fs::path(f.cached_sweep);
            topnav::cmd_navigate(cfg, out, cache, std::cout);
        } else if (check->parsed()) {
            topnav::cmd_check_grad(cfg, out, std::cout);
        }
        std::cout << "outputs in " << out.string() << "\n";
    } catch (const topnav::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const topnav::DivergenceError& e) {
        std::cerr << "error: simulation diverged: " << e.what() << " (last finite time " << e.last_finite_time()
                  << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
