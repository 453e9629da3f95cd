#include "topnav/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>

#include <json.hpp>

#include "topnav/io.hpp"
#include "topnav/plot.hpp"

namespace topnav {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void echo_config(const RunConfig& cfg, const fs::path& out_dir) {
    write_file(out_dir / "config.json", config_to_json(cfg));
}

Provenance provenance_for(const RunConfig& cfg, const std::string& source) {
    const SystemModel m = make_model(cfg.model);
    std::string params;
    for (std::size_t i = 0; i < cfg.parameters.size(); ++i) {
        if (i) params += ", ";
        params += m.parameters.names[i] + "=" + format_number(cfg.parameters[i]);
    }
    return {{"model", cfg.model},
            {"parameters", params},
            {"simulation", "t0=" + format_number(cfg.simulation.t0) + " tf=" + format_number(cfg.simulation.tf) +
                               " dt=" + format_number(cfg.simulation.dt) +
                               " tail=" + std::to_string(cfg.simulation.tail_count)},
            {"seed", std::to_string(cfg.seed)},
            {"data", source}};
}

void write_sweep_plots(const SweepResult& sweep, const PathRecord* path, const fs::path& out_dir,
                       const Provenance& prov, std::size_t& written) {
    for (const auto& f : sweep.feature_names) {
        Provenance p = prov;
        write_file(out_dir / ("sweep_" + f + ".svg"), heatmap_svg(sweep, f, nullptr, p));
        ++written;
        if (path) {
            p.emplace_back("path", "path.json");
            write_file(out_dir / ("path_" + f + ".svg"), heatmap_svg(sweep, f, path, p));
            ++written;
        }
    }
}

void check_sweep_matches(const SweepResult& sweep, const RunConfig& cfg, std::span<const double> start) {
    if (sweep.model != cfg.model)
        throw InputError("cached sweep is for model '" + sweep.model + "', config is for '" + cfg.model + "'");
    if (sweep.base_mu.size() != start.size()) throw InputError("cached sweep has the wrong parameter count");
    for (std::size_t i = 0; i < start.size(); ++i) {
        if (i == sweep.axis_index[0] || i == sweep.axis_index[1]) continue;
        if (sweep.base_mu[i] != start[i])
            throw InputError("cached sweep holds parameter " + std::to_string(i) + " at " +
                             format_number(sweep.base_mu[i]) + " but the path starts at " + format_number(start[i]));
    }
}

}  // namespace

SimulateOutcome cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    cfg.validate();
    echo_config(cfg, out_dir);
    const SystemModel model = cfg.system();
    const TopologicalObjective objective(model, cfg.initial_state, cfg.simulation, cfg.loss_terms(), cfg.balance,
                                         cfg.box());
    SimulateOutcome out;
    out.state = objective.forward(cfg.parameters);
    out.features = summarize(out.state.diagram);

    write_file(out_dir / "trajectory.csv", trajectory_csv(out.state.trajectory, model.state_names));
    write_file(out_dir / "diagram.csv", diagram_csv(out.state.diagram));
    write_file(out_dir / "diagram.json", diagram_json(out.state.diagram));

    json terms = json::array();
    const auto labels = objective.term_labels();
    for (std::size_t k = 0; k < labels.size(); ++k) {
        json t{{"label", labels[k]}};
        if (out.state.loss) {
            t["raw"] = number_or_null(out.state.loss->raw[k]);
            t["value"] = number_or_null(out.state.loss->per_term[k]);
        }
        terms.push_back(t);
    }
    const FeatureSummary& f = out.features;
    json doc{{"schema_version", kSchemaVersion},
             {"kind", "features"},
             {"mu", cfg.parameters},
             {"maxPers1", f.max_pers1},
             {"totPers1", f.tot_pers1},
             {"entropy1", f.entropy1 ? json(*f.entropy1) : json(nullptr)},
             {"h1_count", f.h1_count},
             {"loss", out.state.loss ? number_or_null(out.state.loss->total) : json(nullptr)},
             {"undefined_reason", out.state.undefined_reason},
             {"terms", terms}};
    write_file(out_dir / "features.json", doc.dump(2) + "\n");

    const std::size_t n = out.state.trajectory.size();
    const Provenance prov = provenance_for(cfg, "trajectory.csv");
    write_file(out_dir / "trajectory.svg",
               trajectory_svg(out.state.trajectory, model.state_names, model.name == "lorenz",
                              n - cfg.simulation.tail_count, prov));
    write_file(out_dir / "diagram.svg", diagram_svg(out.state.diagram, provenance_for(cfg, "diagram.json")));

    log << "simulated " << n << " samples; tail of " << cfg.simulation.tail_count << " points\n"
        << "maxPers1 " << format_number(f.max_pers1) << "  totPers1 " << format_number(f.tot_pers1) << "  entropy1 "
        << (f.entropy1 ? format_number(*f.entropy1) : std::string("undefined")) << "  H1 pairs " << f.h1_count
        << "\n";
    return out;
}

SweepResult cmd_sweep(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    cfg.validate();
    echo_config(cfg, out_dir);
    const SystemModel model = cfg.system();
    const std::size_t total = cfg.sweep.x.count * cfg.sweep.y.count;
    std::size_t last_report = 0;
    std::mutex log_mutex;
    auto progress = [&](std::size_t done, std::size_t all) {
        std::lock_guard lock(log_mutex);
        if (done == all || done >= last_report + std::max<std::size_t>(1, all / 10)) {
            last_report = done;
            log << "sweep " << done << "/" << all << "\n" << std::flush;
        }
    };
    log << "sweeping " << cfg.sweep.x.param << " x " << cfg.sweep.y.param << " (" << total << " cells, "
        << cfg.workers << " workers)\n";
    SweepResult sweep = run_sweep(model, cfg.initial_state, cfg.simulation, cfg.parameters, cfg.sweep, cfg.workers,
                                  progress);

    write_file(out_dir / "sweep.json", sweep_json(sweep));
    for (const auto& f : sweep.feature_names) write_file(out_dir / ("sweep_" + f + ".csv"), sweep_feature_csv(sweep, f));
    std::size_t written = 0;
    write_sweep_plots(sweep, nullptr, out_dir, provenance_for(cfg, "sweep.json"), written);

    std::size_t diverged = 0;
    for (auto d : sweep.diverged) diverged += d;
    log << "sweep done; " << diverged << " diverged cells\n";
    return sweep;
}

PathRecord cmd_navigate(const RunConfig& cfg, const fs::path& out_dir, const std::optional<fs::path>& cached_sweep,
                        std::ostream& log) {
    cfg.validate();
    echo_config(cfg, out_dir);
    const SystemModel model = cfg.system();

    std::optional<SweepResult> sweep;
    if (cached_sweep) {
        sweep = parse_sweep_json(read_file(*cached_sweep));
        log << "using cached sweep " << cached_sweep->string() << "\n";
    }

    PathRecord path;
    if (cfg.scheme == Scheme::gd) {
        log << "gradient descent from " << format_number(cfg.parameters[0]);
        for (std::size_t i = 1; i < cfg.parameters.size(); ++i) log << ", " << format_number(cfg.parameters[i]);
        log << " for up to " << cfg.gd.max_epochs << " epochs\n";
        path = gradient_descent_path(model, cfg.initial_state, cfg.simulation, cfg.loss_terms(), cfg.balance,
                                     cfg.parameters, cfg.gd, cfg.box());
    } else {
        const Vec start = cfg.start_for_sampling();
        const TrustRegionConfig tr = cfg.sampling_config();
        Feature feature;
        Box domain;
        if (sweep) {
            check_sweep_matches(*sweep, cfg, start);
            const GridFeature grid(*sweep, cfg.sampling_feature);
            feature = grid;
            domain = grid.domain();
        } else {
            const Vec x0 = cfg.initial_state;
            const SimulationConfig sim = cfg.simulation;
            const std::string name = cfg.sampling_feature;
            feature = [model, x0, sim, name](std::span<const double> mu) {
                try {
                    return feature_value(simulate_features(model, x0, sim, mu), name);
                } catch (const DivergenceError&) {
                    return std::numeric_limits<double>::quiet_NaN();
                }
            };
            domain = cfg.box();
        }
        log << to_string(cfg.scheme) << " sampling of " << cfg.sampling_feature << " for " << tr.steps
            << " steps\n";
        path = sampling_path(feature, domain, start, tr);
        path.param_names = model.parameters.names;
        write_file(out_dir / "regions.csv", regions_csv(path));
    }

    write_file(out_dir / "path.csv", path_csv(path));
    write_file(out_dir / "path.json", path_json(path));
    const Provenance prov = provenance_for(cfg, "path.json");
    write_file(out_dir / "loss.svg", loss_svg(path, prov));
    if (sweep) {
        std::size_t written = 0;
        write_sweep_plots(*sweep, &path, out_dir, prov, written);
    }

    const PathStep& last = path.final_step();
    log << "finished after " << path.steps.size() << " recorded steps (" << to_string(path.termination) << ")\n"
        << "final point";
    for (std::size_t i = 0; i < last.mu.size(); ++i)
        log << " " << (i < path.param_names.size() ? path.param_names[i] : std::to_string(i)) << "="
            << format_number(last.mu[i]);
    log << "  loss " << format_number(last.loss) << "\n";
    if (cfg.scheme != Scheme::gd) log << "sampled area " << format_number(path.sampled_area) << "\n";
    return path;
}

GradCheckReport cmd_check_grad(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    cfg.validate();
    echo_config(cfg, out_dir);
    const SystemModel model = cfg.system();
    std::vector<LossTerm> terms = cfg.loss_terms();
    if (cfg.balance) {
        // A balanced loss is constant in value; compare the loss whose divisors
        // stay frozen at mu, which has the same gradient there.
        const TopologicalObjective balanced(model, cfg.initial_state, cfg.simulation, terms, true, cfg.box());
        const PipelineState state = balanced.forward(cfg.parameters);
        if (state.loss) {
            for (std::size_t k = 0; k < terms.size(); ++k)
                if (!terms[k].is_penalty()) terms[k].weight /= std::max(std::abs(state.loss->raw[k]), 1e-12);
        }
    }
    const TopologicalObjective objective(model, cfg.initial_state, cfg.simulation, terms, false, cfg.box());
    GradCheckReport r;
    r.mu = cfg.parameters;
    const ObjectiveResult res = objective(r.mu);
    r.loss = res.loss;
    r.flags = res.flags;
    r.adjoint = res.gradient;
    r.finite_difference = finite_difference_gradient(
        [&](std::span<const double> mu) { return objective.loss_at(mu); }, r.mu, cfg.check_grad_h);

    const auto mask = model.parameters.free_mask();
    for (std::size_t i = 0; i < r.mu.size(); ++i) {
        if (mask[i]) continue;
        r.adjoint[i] = 0.0;
        r.finite_difference[i] = 0.0;
    }
    Vec diff(r.mu.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = r.adjoint[i] - r.finite_difference[i];
    const double fd_norm = norm2(r.finite_difference);
    const double diff_norm = norm2(diff);
    r.component_error.assign(diff.size(), 0.0);
    if (diff_norm == 0.0) {
        r.relative_error = 0.0;
    } else {
        const double denom = fd_norm > 0.0 ? fd_norm : std::numeric_limits<double>::quiet_NaN();
        r.relative_error = diff_norm / denom;
        for (std::size_t i = 0; i < diff.size(); ++i) r.component_error[i] = std::abs(diff[i]) / denom;
    }
    r.pass = std::isfinite(r.relative_error) && r.relative_error <= cfg.check_grad_tolerance;

    json comps = json::array();
    for (std::size_t i = 0; i < r.mu.size(); ++i) {
        comps.push_back(json{{"name", model.parameters.names[i]},
                             {"free", static_cast<bool>(mask[i])},
                             {"adjoint", number_or_null(r.adjoint[i])},
                             {"finite_difference", number_or_null(r.finite_difference[i])},
                             {"error", number_or_null(r.component_error[i])}});
    }
    json doc{{"schema_version", kSchemaVersion},
             {"kind", "gradient_check"},
             {"h", cfg.check_grad_h},
             {"tolerance", cfg.check_grad_tolerance},
             {"balance_divisors_frozen", cfg.balance},
             {"loss", number_or_null(r.loss)},
             {"flags", flag_names(r.flags)},
             {"relative_error", number_or_null(r.relative_error)},
             {"pass", r.pass},
             {"components", comps}};
    write_file(out_dir / "check_grad.json", doc.dump(2) + "\n");

    log << "loss " << format_number(r.loss) << " at h=" << format_number(cfg.check_grad_h) << "\n";
    for (std::size_t i = 0; i < r.mu.size(); ++i) {
        if (!mask[i]) continue;
        log << "  " << model.parameters.names[i] << ": adjoint " << format_number(r.adjoint[i]) << "  fd "
            << format_number(r.finite_difference[i]) << "  error " << format_number(r.component_error[i]) << "\n";
    }
    if (!flag_names(r.flags).empty()) {
        log << "  flags:";
        for (const auto& f : flag_names(r.flags)) log << " " << f;
        log << "\n";
    }
    log << "relative error " << format_number(r.relative_error) << " -> " << (r.pass ? "PASS" : "FAIL") << "\n";
    if (!r.pass)
        log << "gradients disagree; expected in chaotic regimes or where the critical simplices change within h\n";
    return r;
}

std::size_t cmd_plot(const fs::path& out_dir, std::ostream& log) {
    std::size_t written = 0;
    std::optional<PathRecord> path;
    if (fs::exists(out_dir / "path.json")) {
        path = parse_path_json(read_file(out_dir / "path.json"));
        write_file(out_dir / "loss.svg", loss_svg(*path, {{"data", "path.json"}}));
        ++written;
    }
    if (fs::exists(out_dir / "sweep.json")) {
        const SweepResult sweep = parse_sweep_json(read_file(out_dir / "sweep.json"));
        write_sweep_plots(sweep, path ? &*path : nullptr, out_dir, {{"model", sweep.model}}, written);
    }
    if (fs::exists(out_dir / "diagram.json")) {
        const json j = json::parse(read_file(out_dir / "diagram.json"));
        PersistenceDiagram diag;
        diag.max_dim = j.at("max_dim").get<int>();
        diag.threshold = j.at("threshold").get<double>();
        for (const auto& p : j.at("pairs")) {
            PersistencePair pair;
            pair.dim = p.at("dim").get<int>();
            pair.birth = p.at("birth").get<double>();
            pair.death = p.at("death").is_null() ? std::numeric_limits<double>::infinity() : p.at("death").get<double>();
            diag.pairs.push_back(pair);
        }
        write_file(out_dir / "diagram.svg", diagram_svg(diag, {{"data", "diagram.json"}}));
        ++written;
    }
    log << "wrote " << written << " plots in " << out_dir.string() << "\n";
    if (written == 0) throw InputError("no sweep.json, path.json or diagram.json in " + out_dir.string());
    return written;
}

}  // namespace topnav
