#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "topnav/commands.hpp"
#include "topnav/io.hpp"
#include "topnav/plot.hpp"

using namespace topnav;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("topnav_test_" + name);
    fs::remove_all(p);
    return p;
}

// A periodic Rossler run short enough for unit tests.
RunConfig quick_rossler(const fs::path& out) {
    RunConfig c = default_config("rossler");
    c.parameters = {0.1, 0.2, 5.7};
    c.simulation = SimulationConfig{0.0, 60.0, 0.04, 150};
    c.gd.max_epochs = 2;
    c.output_dir = out.string();
    return c;
}

bool same_doubles(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i] || (std::isnan(a[i]) && std::isnan(b[i])))) return false;
    return true;
}

SweepResult synthetic_sweep() {
    SweepResult s;
    s.model = "rossler";
    s.axis_names = {"a", "b"};
    s.axis_index = {0, 1};
    s.axes = {Vec{-0.1, 0.0, 0.1, 0.2, 0.3}, Vec{0.0, 0.2, 0.4, 0.6}};
    s.base_mu = {0.2, 0.2, 5.7};
    s.feature_names = {"maxPers1", "entropy1"};
    Matrix g(4, 5), e(4, 5);
    for (std::size_t iy = 0; iy < 4; ++iy) {
        for (std::size_t ix = 0; ix < 5; ++ix) {
            // peak at the corner a = 0.3, b = 0
            g(iy, ix) = 10.0 - std::hypot(s.axes[0][ix] - 0.3, s.axes[1][iy]);
            e(iy, ix) = 0.1 * static_cast<double>(ix);
        }
    }
    e(0, 0) = std::nan("");
    s.grids = {g, e};
    s.diverged.assign(20, 0);
    return s;
}

}  // namespace

TEST_CASE("numbers print in shortest round-trip form") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(5.0) == "5");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(INFINITY) == "inf");
    CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("diagram csv lists edges and leaves missing ones empty") {
    PersistenceDiagram d;
    d.pairs.push_back(PersistencePair{0, 0.0, 1.5, std::nullopt, Edge{2, 7}});
    d.pairs.push_back(PersistencePair{0, 0.0, INFINITY, std::nullopt, std::nullopt});
    d.pairs.push_back(PersistencePair{1, 1.0, 2.0, Edge{0, 3}, Edge{1, 4}});
    CHECK(diagram_csv(d) ==
          "dim,birth,death,birth_i,birth_j,death_k,death_l\n"
          "0,0,1.5,,,2,7\n"
          "0,0,inf,,,,\n"
          "1,1,2,0,3,1,4\n");
    const std::string j = diagram_json(d);
    CHECK(j.find("\"schema_version\": 1") != std::string::npos);
    CHECK(j.find("\"death\": null") != std::string::npos);
}

TEST_CASE("trajectory csv has a time column and one per state") {
    Trajectory t;
    t.times = {0.0, 0.5};
    t.states = Matrix(2, 2);
    t.states.data = {1.0, 2.0, 3.0, 4.25};
    CHECK(trajectory_csv(t, {"theta", "theta_dot"}) == "t,theta,theta_dot\n0,1,2\n0.5,3,4.25\n");
    CHECK_THROWS_AS(trajectory_csv(t, {"x"}), InputError);
}

TEST_CASE("sweep json round-trips including masked cells") {
    SweepResult s = synthetic_sweep();
    s.diverged[7] = 1;
    s.grids[0](1, 2) = std::nan("");
    const SweepResult back = parse_sweep_json(sweep_json(s));
    CHECK(back.model == s.model);
    CHECK(back.axis_names == s.axis_names);
    CHECK(back.axis_index == s.axis_index);
    CHECK(back.axes == s.axes);
    CHECK(back.base_mu == s.base_mu);
    CHECK(back.feature_names == s.feature_names);
    CHECK(back.diverged == s.diverged);
    for (std::size_t k = 0; k < s.grids.size(); ++k) CHECK(same_doubles(back.grids[k].data, s.grids[k].data));
    CHECK(sweep_json(back) == sweep_json(s));
    CHECK_THROWS_AS(parse_sweep_json("{}"), InputError);
    CHECK_THROWS_AS(parse_sweep_json("[1, 2"), InputError);
}

TEST_CASE("sweep feature csv is in grid order") {
    const SweepResult s = synthetic_sweep();
    std::istringstream in(sweep_feature_csv(s, "entropy1"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,b,entropy1,diverged");
    std::getline(in, line);
    CHECK(line == "-0.1,0,nan,0");
    std::getline(in, line);
    CHECK(line == "0,0,0.1,0");
    std::size_t rows = 2;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 20);
}

TEST_CASE("path json round-trips") {
    PathRecord p;
    p.param_names = {"a", "b", "c"};
    p.term_labels = {"entropy1", "maxPers1"};
    p.termination = Termination::step_tol;
    p.termination_detail = "small step";
    p.sampled_area = 0.5;
    PathStep s;
    s.epoch = 3;
    s.mu = {0.1, 0.2, 5.7};
    s.loss = std::nan("");
    s.term_values = {1.0, -1.0};
    s.features.max_pers1 = 2.0;
    s.features.entropy1 = 0.25;
    s.features.h1_count = 4;
    s.grad_norm = 0.3;
    s.step_grad_norm = 0.2;
    s.learning_rate = 0.01;
    s.flags = step_flags::clipped | step_flags::outside_box;
    s.region = Box{{0.0, 0.1, 5.7}, {0.2, 0.3, 5.7}};
    s.confidence = 0.9;
    s.note = "x";
    p.steps = {s, s};
    p.steps[1].region.reset();
    p.steps[1].confidence.reset();
    p.steps[1].features.entropy1.reset();
    const PathRecord back = parse_path_json(path_json(p));
    CHECK(path_json(back) == path_json(p));
    CHECK(back.steps[0].flags == s.flags);
    CHECK(back.termination == Termination::step_tol);
    CHECK(std::isnan(back.steps[0].loss));

    const std::string csv = path_csv(p);
    CHECK(csv.rfind("epoch,a,b,c,loss,term0_entropy1,term1_maxPers1,maxPers1,totPers1,entropy1,h1_count,"
                    "grad_norm,step_grad_norm,learning_rate,flags\n",
                    0) == 0);
    CHECK(csv.find("clipped|outside_box") != std::string::npos);
    const std::string regions = regions_csv(p);
    CHECK(regions == "step,a_lower,b_lower,c_lower,a_upper,b_upper,c_upper,area,confidence\n"
                     "3,0,0.1,5.7,0.2,0.3,5.7,0.04,0.9\n");
}

TEST_CASE("svg output is self-contained and carries provenance") {
    const SweepResult s = synthetic_sweep();
    PathRecord p;
    for (double a : {0.0, 0.1, 0.2}) {
        PathStep st;
        st.mu = {a, 0.3, 5.7};
        p.steps.push_back(st);
    }
    const std::string svg = heatmap_svg(s, "maxPers1", &p, {{"source", "unit test -- data"}});
    CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
    CHECK(svg.size() > 1000);
    CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
    CHECK(svg.find("source: unit test - - data") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("#9e9e9e") == std::string::npos);
    const std::string ent = heatmap_svg(s, "entropy1");
    CHECK(ent.find("#9e9e9e") != std::string::npos);
    const auto open = svg.find("<!--"), close = svg.find("-->");
    CHECK(svg.substr(open + 4, close - open - 4).find("--") == std::string::npos);
}

TEST_CASE("simulate writes its artifacts and is byte-identical on re-run") {
    const fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
    std::ostringstream log;
    const SimulateOutcome out = cmd_simulate(quick_rossler(a), a, log);
    cmd_simulate(quick_rossler(a), b, log);
    for (const char* f : {"trajectory.csv", "diagram.csv", "diagram.json", "features.json", "trajectory.svg",
                          "diagram.svg", "config.json"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(read_file(a / f) == read_file(b / f));
    }
    CHECK(out.state.trajectory.size() == 1501);
    CHECK(out.state.cloud.size() == 150);
    CHECK(out.features.h1_count >= 1);
    CHECK(parse_config(read_file(a / "config.json")) == quick_rossler(a));
}

TEST_CASE("a one-cell sweep matches simulate") {
    const fs::path dir = fresh_dir("one_cell");
    RunConfig c = quick_rossler(dir);
    c.sweep.x = GridAxis{"a", 0.1, 0.1, 1};
    c.sweep.y = GridAxis{"b", 0.2, 0.2, 1};
    c.sweep.features = {"maxPers1", "totPers1", "entropy1", "h1_count"};
    std::ostringstream log;
    const SimulateOutcome sim = cmd_simulate(c, dir / "sim", log);
    const SweepResult sweep = cmd_sweep(c, dir / "sweep", log);
    CHECK(std::abs(sweep.grid("maxPers1")(0, 0) - sim.features.max_pers1) <= 1e-12);
    CHECK(std::abs(sweep.grid("totPers1")(0, 0) - sim.features.tot_pers1) <= 1e-12);
    REQUIRE(sim.features.entropy1);
    CHECK(std::abs(sweep.grid("entropy1")(0, 0) - *sim.features.entropy1) <= 1e-12);
    CHECK(sweep.grid("h1_count")(0, 0) == static_cast<double>(sim.features.h1_count));
    for (const char* f : {"sweep.json", "sweep_maxPers1.csv", "sweep_entropy1.svg"}) CHECK(fs::exists(dir / "sweep" / f));
}

TEST_CASE("navigate with zero epochs records only the start") {
    const fs::path dir = fresh_dir("zero_epochs");
    RunConfig c = quick_rossler(dir);
    c.gd.max_epochs = 0;
    std::ostringstream log;
    const PathRecord p = cmd_navigate(c, dir, std::nullopt, log);
    REQUIRE(p.steps.size() == 1);
    CHECK(p.steps[0].mu == c.parameters);
    CHECK(p.steps[0].epoch == 0);
    CHECK(fs::exists(dir / "path.csv"));
    CHECK(fs::exists(dir / "path.json"));
    CHECK(fs::exists(dir / "loss.svg"));
}

TEST_CASE("derivative-free navigation on a cached sweep") {
    const fs::path dir = fresh_dir("cached");
    write_file(dir / "sweep.json", sweep_json(synthetic_sweep()));
    RunConfig c = quick_rossler(dir / "out");
    c.scheme = Scheme::global;
    c.sampling.steps = 40;
    c.sampling.inner_budget = 16;
    c.sampling_start = Vec{-0.1, 0.6, 5.7};
    std::ostringstream log;
    const PathRecord g = cmd_navigate(c, dir / "out", dir / "sweep.json", log);
    CHECK(std::hypot(g.final_step().mu[0] - 0.3, g.final_step().mu[1]) < 0.02);
    CHECK(fs::exists(dir / "out" / "regions.csv"));
    CHECK(fs::exists(dir / "out" / "path_maxPers1.svg"));
    CHECK(g.param_names == std::vector<std::string>{"a", "b", "c"});

    // plot re-renders from the written files
    fs::copy_file(dir / "sweep.json", dir / "out" / "sweep.json");
    CHECK(cmd_plot(dir / "out", log) >= 5);

    c.sampling_start = Vec{-0.1, 0.6, 5.0};
    CHECK_THROWS_AS(cmd_navigate(c, dir / "bad", dir / "sweep.json", log), InputError);
    c.model = "lorenz";
    RunConfig l = default_config("lorenz");
    l.scheme = Scheme::local;
    CHECK_THROWS_AS(cmd_navigate(l, dir / "bad", dir / "sweep.json", log), InputError);
}

TEST_CASE("gradient check on a zero-weight loss passes trivially") {
    const fs::path dir = fresh_dir("zero_weight");
    RunConfig c = quick_rossler(dir);
    for (auto& t : c.terms) t.weight = 0.0;
    std::ostringstream log;
    const GradCheckReport r = cmd_check_grad(c, dir, log);
    CHECK(r.pass);
    CHECK(r.relative_error == 0.0);
    CHECK(norm2(r.adjoint) == 0.0);
    CHECK(norm2(r.finite_difference) == 0.0);
    CHECK(fs::exists(dir / "check_grad.json"));
    CHECK(log.str().find("PASS") != std::string::npos);
}

TEST_CASE("gradient check agrees in the periodic regime") {
    const fs::path dir = fresh_dir("check_periodic");
    RunConfig c = default_config("rossler");
    c.parameters = {0.1, 0.2, 5.7};
    c.output_dir = dir.string();
    std::ostringstream log;
    const GradCheckReport r = cmd_check_grad(c, dir, log);
    CHECK(r.pass);
    CHECK(r.relative_error < 1e-2);
    CHECK(r.adjoint[2] == 0.0);  // c is frozen
}

TEST_CASE("plot with nothing to draw is an error") {
    const fs::path dir = fresh_dir("empty_plot");
    fs::create_directories(dir);
    std::ostringstream log;
    CHECK_THROWS_AS(cmd_plot(dir, log), InputError);
}
