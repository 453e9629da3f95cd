#include <doctest.h>

#include <cmath>
#include <string>

#include "topnav/config.hpp"

using namespace topnav;

namespace {

bool rejects(const std::string& json_text) {
    try {
        parse_config(json_text);
    } catch (const InputError&) {
        return true;
    }
    return false;
}

}  // namespace

TEST_CASE("rossler defaults follow the published recipe") {
    const RunConfig c = default_config("rossler");
    CHECK(c.parameters == Vec{0.2, 0.2, 5.7});
    CHECK(c.initial_state == Vec{-0.4, 0.6, 1.0});
    CHECK(c.simulation == SimulationConfig{0.0, 200.0, 0.04, 500});
    CHECK(c.gd.learning_rate == 0.01);
    CHECK(c.gd.decay_per_epoch == 0.99);
    CHECK(c.gd.clip_norm == 1.0);
    CHECK(c.gd.max_epochs == 300);
    CHECK(c.balance);
    REQUIRE(c.terms.size() == 3);
    CHECK(c.terms[0].kind == "entropy");
    CHECK(c.terms[0].sign == 1.0);
    CHECK(c.terms[1].kind == "maxPers");
    CHECK(c.terms[1].sign == -1.0);
    CHECK(c.terms[2].kind == "box");
    CHECK(c.sweep.x == GridAxis{"a", -0.1, 0.3, 40});
    CHECK(c.sweep.y == GridAxis{"b", 0.0, 0.6, 40});
    c.validate();
}

TEST_CASE("lorenz defaults follow the published recipe") {
    const RunConfig c = default_config("lorenz");
    const SystemModel m = lorenz_model();
    CHECK(c.parameters[m.parameters.index_of("sigma")] == 20.0);
    CHECK(c.parameters[m.parameters.index_of("rho")] == 190.0);
    CHECK(c.initial_state == Vec{1.0, 1.0, 1.0});
    CHECK(c.simulation == SimulationConfig{0.0, 10.0, 0.01, 500});
    CHECK(c.gd.learning_rate == 1.0);
    CHECK(c.gd.decay_per_epoch == 0.995);
    CHECK(c.gd.clip_norm == 1.0);
    const Vec start = c.start_for_sampling();
    CHECK(start[m.parameters.index_of("rho")] == 153.0);
    CHECK(start[m.parameters.index_of("sigma")] == 45.0);
    CHECK(c.sampling.steps == 2500);
    CHECK(c.sampling.step_size == 0.1);
    CHECK(c.sampling.confidence_window == 5);
    CHECK(c.sweep.x == GridAxis{"rho", 80.0, 300.0, 30});
    CHECK(c.sweep.y == GridAxis{"sigma", 4.0, 50.0, 30});
    c.validate();
}

TEST_CASE("pendulum defaults follow the published recipe") {
    const RunConfig c = default_config("magnetic_pendulum");
    CHECK(c.parameters == Vec{4.0, 7.5});
    CHECK(c.simulation == SimulationConfig{0.0, 100.0, 0.03, 500});
    CHECK(c.gd.learning_rate == 0.1);
    CHECK(c.gd.max_epochs == 100);
    REQUIRE(c.terms.size() == 2);
    CHECK(c.terms[0].kind == "maxPers");
    CHECK(c.terms[0].sign == 1.0);
    c.validate();
}

TEST_CASE("effective config round-trips through JSON") {
    for (const auto& name : model_names()) {
        RunConfig c = default_config(name);
        c.seed = 12345678901234ull;
        c.scheme = Scheme::local;
        c.sampling.min_extent = 0.25;
        c.gd.clip_norm = std::nullopt;
        const std::string text = config_to_json(c);
        const RunConfig back = parse_config(text);
        CHECK(back == c);
        CHECK(config_to_json(back) == text);
    }
}

TEST_CASE("config overrides only what it names") {
    const RunConfig c = parse_config(R"({
        "model": "rossler",
        "parameters": {"a": 0.1},
        "simulation": {"tf": 100},
        "loss": {"balance": false, "terms": [{"kind": "totPers", "sign": 1}]},
        "gd": {"clip_norm": null, "max_epochs": 7},
        "scheme": "global",
        "seed": 9,
        "workers": 2
    })");
    CHECK(c.parameters == Vec{0.1, 0.2, 5.7});
    CHECK(c.simulation.tf == 100.0);
    CHECK(c.simulation.dt == 0.04);
    CHECK_FALSE(c.balance);
    REQUIRE(c.terms.size() == 1);
    CHECK(c.terms[0].kind == "totPers");
    CHECK_FALSE(c.gd.clip_norm);
    CHECK(c.gd.max_epochs == 7);
    CHECK(c.gd.learning_rate == 0.01);
    CHECK(c.scheme == Scheme::global);
    CHECK(c.sampling_config().mode == SamplingMode::global);
    CHECK(c.sampling_config().seed == 9);
    CHECK(c.workers == 2);
}

TEST_CASE("unknown keys are errors at every level") {
    CHECK(rejects(R"({"model": "rossler", "colour": 1})"));
    CHECK(rejects(R"({"model": "rossler", "parameters": {"d": 1}})"));
    CHECK(rejects(R"({"model": "rossler", "simulation": {"tail": 10}})"));
    CHECK(rejects(R"({"model": "rossler", "gd": {"lr": 0.1}})"));
    CHECK(rejects(R"({"model": "rossler", "loss": {"terms": [{"kind": "maxPers", "power": 2}]}})"));
    CHECK(rejects(R"({"model": "rossler", "sweep": {"x": {"name": "a"}}})"));
    CHECK(rejects(R"({"model": "rossler", "sampling": {"start": {"z": 1}}})"));
}

TEST_CASE("invalid values are rejected at parse time") {
    CHECK(rejects(R"({"model": "rossler", "simulation": {"t0": 5, "tf": 5}})"));
    CHECK(rejects(R"({"model": "rossler", "simulation": {"dt": 0}})"));
    CHECK(rejects(R"({"model": "rossler", "simulation": {"tail_count": 100000}})"));
    CHECK(rejects(R"({"model": "duffing"})"));
    CHECK(rejects(R"({"parameters": {"a": 1}})"));
    CHECK(rejects(R"({"model": "rossler", "parameters": {"a": "big"}})"));
    CHECK(rejects(R"({"model": "rossler", "gd": {"max_epochs": -1}})"));
    CHECK(rejects(R"({"model": "rossler", "gd": {"learning_rate": 0}})"));
    CHECK(rejects(R"({"model": "rossler", "scheme": "newton"})"));
    CHECK(rejects(R"({"model": "rossler", "loss": {"terms": []}})"));
    CHECK(rejects(R"({"model": "rossler", "loss": {"terms": [{"kind": "maxPers", "sign": 2}]}})"));
    CHECK(rejects(R"({"model": "rossler", "loss": {"terms": [{"kind": "ball", "radius": 1}]}})"));
    CHECK(rejects(R"({"model": "rossler", "sweep": {"y": {"param": "a"}}})"));
    CHECK(rejects(R"({"model": "rossler", "sweep": {"features": ["loops"]}})"));
    CHECK(rejects(R"({"model": "rossler", "initial_state": [1, 2]})"));
    CHECK(rejects(R"({"model": "rossler", "bounds": {"a": [1, 0]}})"));
    CHECK(rejects(R"({"model": "rossler", "workers": 0})"));
    CHECK(rejects(R"({"model": "rossler" )"));
}

TEST_CASE("bounds can be cleared or changed") {
    const RunConfig c = parse_config(R"({"model": "rossler", "bounds": {"a": null, "b": [0.1, 0.5]}})");
    CHECK_FALSE(c.bounds[0]);
    REQUIRE(c.bounds[1]);
    CHECK(*c.bounds[1] == Bounds{0.1, 0.5});
    const Box b = c.box();
    CHECK(std::isinf(b.lower[0]));
    CHECK(b.lower[1] == 0.1);
    CHECK(c.system().parameters.bounds[1] == Bounds{0.1, 0.5});
}

TEST_CASE("ball terms penalize the inside of the ball") {
    TermSpec t;
    t.kind = "ball";
    t.center = {0.0, 0.0, 5.7};
    t.radius = 0.1;
    t.a = 10.0;
    const LossTerm term = make_loss_term(t, 3);
    CHECK(term.kind == TermKind::forbidden_param);
    Vec grad(3);
    const double inside = term.param_region(Vec{0.0, 0.0, 5.7}, grad);
    CHECK(inside == doctest::Approx(0.01));
    const double outside = term.param_region(Vec{0.2, 0.0, 5.7}, grad);
    CHECK(outside < 0.0);
    CHECK(grad[0] == doctest::Approx(-0.4));
    t.center = {0.0};
    CHECK_THROWS_AS(make_loss_term(t, 3), InputError);
}
