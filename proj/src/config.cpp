#include "topnav/config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace topnav {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects whatever was not read.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw InputError(path_ + ": expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& at(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string where(const std::string& key) const { return path_ + "." + key; }

    void read(const char* key, double& out) {
        if (!has(key)) return;
        out = number(at(key), where(key));
    }
    void read(const char* key, std::size_t& out) {
        if (!has(key)) return;
        out = static_cast<std::size_t>(unsigned_integer(at(key), where(key)));
    }
    void read(const char* key, int& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number_integer()) throw InputError(where(key) + ": expected an integer");
        out = v.get<int>();
    }
    void read(const char* key, bool& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_boolean()) throw InputError(where(key) + ": expected true or false");
        out = v.get<bool>();
    }
    void read(const char* key, std::string& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_string()) throw InputError(where(key) + ": expected a string");
        out = v.get<std::string>();
    }
    void read(const char* key, std::optional<double>& out) {
        if (!has(key)) return;
        const json& v = at(key);
        out = v.is_null() ? std::nullopt : std::optional<double>(number(v, where(key)));
    }
    void read(const char* key, Vec& out) {
        if (!has(key)) return;
        out = numbers(at(key), where(key));
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw InputError(path_ + ": unknown key '" + item.key() + "'");
    }

    static double number(const json& v, const std::string& path) {
        if (!v.is_number()) throw InputError(path + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw InputError(path + ": must be finite");
        return d;
    }
    static std::uint64_t unsigned_integer(const json& v, const std::string& path) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw InputError(path + ": expected a non-negative integer");
    }
    static Vec numbers(const json& v, const std::string& path) {
        if (!v.is_array()) throw InputError(path + ": expected an array of numbers");
        Vec out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const std::set<std::string> kTermKinds{"maxPers", "totPers", "avgPers", "topN", "entropy", "box", "ball"};

TermSpec parse_term(const json& j, const std::string& path) {
    Section s(j, path);
    TermSpec t;
    s.read("kind", t.kind);
    if (!kTermKinds.count(t.kind)) throw InputError(path + ".kind: unknown term kind '" + t.kind + "'");
    s.read("dim", t.dim);
    s.read("sign", t.sign);
    s.read("weight", t.weight);
    s.read("count", t.count);
    s.read("normalized", t.normalized);
    s.read("a", t.a);
    s.read("margin", t.margin);
    s.read("center", t.center);
    s.read("radius", t.radius);
    s.finish();
    return t;
}

GridAxis parse_axis(const json& j, const std::string& path, GridAxis axis) {
    Section s(j, path);
    s.read("param", axis.param);
    s.read("min", axis.min);
    s.read("max", axis.max);
    s.read("count", axis.count);
    s.finish();
    return axis;
}

// Object of name -> value over the model's parameters, overriding `values`.
void parse_named_values(const json& j, const std::string& path, const std::vector<std::string>& names, Vec& values) {
    Section s(j, path);
    for (std::size_t i = 0; i < names.size(); ++i) s.read(names[i].c_str(), values[i]);
    s.finish();
}

json axis_json(const GridAxis& a) {
    return json{{"param", a.param}, {"min", a.min}, {"max", a.max}, {"count", a.count}};
}

TermSpec term(const std::string& kind, double sign) {
    TermSpec t;
    t.kind = kind;
    t.sign = sign;
    return t;
}

}  // namespace

LossTerm make_loss_term(const TermSpec& spec, std::size_t param_dim) {
    LossTerm t;
    if (spec.kind == "maxPers") {
        t = LossTerm::max_pers(spec.dim, spec.sign, spec.weight);
    } else if (spec.kind == "totPers") {
        t = LossTerm::tot_pers(spec.dim, spec.sign, spec.weight);
    } else if (spec.kind == "avgPers") {
        t = LossTerm::avg_pers(spec.dim, spec.sign, spec.weight);
    } else if (spec.kind == "topN") {
        t = LossTerm::top_n(spec.dim, spec.count, spec.sign, spec.weight);
    } else if (spec.kind == "entropy") {
        t = LossTerm::entropy(spec.dim, spec.normalized, spec.sign, spec.weight);
    } else if (spec.kind == "box") {
        t = LossTerm::box_bounds(spec.a, spec.margin, spec.weight);
    } else if (spec.kind == "ball") {
        if (spec.center.size() != param_dim)
            throw InputError("ball term: center needs " + std::to_string(param_dim) + " components");
        if (!(spec.radius > 0.0)) throw InputError("ball term: radius must be positive");
        const Vec c = spec.center;
        const double r2 = spec.radius * spec.radius;
        t = LossTerm::forbidden_param(
            [c, r2](std::span<const double> mu, std::span<double> grad) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < c.size(); ++i) {
                    const double d = mu[i] - c[i];
                    d2 += d * d;
                    grad[i] = -2.0 * d;
                }
                return r2 - d2;
            },
            spec.a, spec.weight);
    } else {
        throw InputError("unknown loss term kind '" + spec.kind + "'");
    }
    t.validate();
    return t;
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::gd: return "gd";
        case Scheme::global: return "global";
        case Scheme::local: return "local";
    }
    return "gd";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "gd") return Scheme::gd;
    if (s == "global") return Scheme::global;
    if (s == "local") return Scheme::local;
    throw InputError("unknown scheme '" + s + "' (expected gd, global or local)");
}

SystemModel RunConfig::system() const {
    SystemModel m = make_model(model);
    m.parameters.values = parameters;
    m.parameters.bounds = bounds;
    return m;
}

std::vector<LossTerm> RunConfig::loss_terms() const {
    std::vector<LossTerm> out;
    for (const auto& t : terms) out.push_back(make_loss_term(t, parameters.size()));
    return out;
}

Box RunConfig::box() const { return system().parameters.box(); }

TrustRegionConfig RunConfig::sampling_config() const {
    TrustRegionConfig c = sampling;
    c.mode = scheme == Scheme::global ? SamplingMode::global : SamplingMode::local;
    c.seed = seed;
    return c;
}

void RunConfig::validate() const {
    const SystemModel base = make_model(model);
    if (parameters.size() != base.param_dim || bounds.size() != base.param_dim)
        throw InputError("config: parameter count does not match model " + model);
    system().parameters.validate();
    for (double p : parameters)
        if (!std::isfinite(p)) throw InputError("config: parameters must be finite");
    if (initial_state.size() != base.state_dim)
        throw InputError("config: initial_state needs " + std::to_string(base.state_dim) + " components");
    if (!all_finite(initial_state)) throw InputError("config: initial_state must be finite");
    simulation.validate();
    if (terms.empty()) throw InputError("config: loss needs at least one term");
    loss_terms();
    gd.validate();
    sampling.validate();
    if (sampling_start && sampling_start->size() != parameters.size())
        throw InputError("config: sampling start has the wrong size");
    feature_value(FeatureSummary{}, sampling_feature);
    sweep.x.validate();
    sweep.y.validate();
    const std::size_t ix = base.parameters.index_of(sweep.x.param);
    const std::size_t iy = base.parameters.index_of(sweep.y.param);
    if (ix == iy) throw InputError("config: sweep axes must be different parameters");
    if (sweep.features.empty()) throw InputError("config: sweep needs at least one feature");
    for (const auto& f : sweep.features) feature_value(FeatureSummary{}, f);
    if (!(check_grad_h > 0.0)) throw InputError("config: check_grad.h must be positive");
    if (!(check_grad_tolerance > 0.0)) throw InputError("config: check_grad.tolerance must be positive");
    if (workers < 1) throw InputError("config: workers must be at least 1");
    if (output_dir.empty()) throw InputError("config: output_dir must not be empty");
}

RunConfig default_config(const std::string& model_name) {
    const SystemModel m = make_model(model_name);
    RunConfig c;
    c.model = m.name;
    c.parameters = m.parameters.values;
    c.bounds = m.parameters.bounds;
    c.initial_state = m.default_initial_state;
    c.simulation = m.default_sim;
    c.terms = {term("entropy", 1.0), term("maxPers", -1.0), term("box", 1.0)};
    c.balance = true;
    c.output_dir = "out/" + m.name;

    if (m.name == "rossler") {
        c.gd.learning_rate = 0.01;
        c.gd.decay_per_epoch = 0.99;
        c.gd.clip_norm = 1.0;
        c.gd.max_epochs = 300;
        c.sweep.x = GridAxis{"a", -0.1, 0.3, 40};
        c.sweep.y = GridAxis{"b", 0.0, 0.6, 40};
    } else if (m.name == "lorenz") {
        c.gd.learning_rate = 1.0;
        c.gd.decay_per_epoch = 0.995;
        c.gd.clip_norm = 1.0;
        c.gd.max_epochs = 400;
        Vec start = c.parameters;
        start[m.parameters.index_of("rho")] = 153.0;
        start[m.parameters.index_of("sigma")] = 45.0;
        c.sampling_start = start;
        c.sweep.x = GridAxis{"rho", 80.0, 300.0, 30};
        c.sweep.y = GridAxis{"sigma", 4.0, 50.0, 30};
    } else {
        c.terms = {term("maxPers", 1.0), term("box", 1.0)};
        c.balance = false;
        c.gd.learning_rate = 0.1;
        c.gd.decay_per_epoch = 1.0;
        c.gd.clip_norm = std::nullopt;
        c.gd.max_epochs = 100;
        c.sweep.x = GridAxis{"A_cm", 0.5, 6.0, 30};
        c.sweep.y = GridAxis{"omega", 5.0, 10.0, 30};
        c.sweep.features = {"maxPers1", "totPers1", "entropy1"};
    }
    return c;
}

RunConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: invalid JSON: ") + e.what());
    }
    Section root(j, "config");
    if (!root.has("model")) throw InputError("config: 'model' is required");
    std::string model;
    root.read("model", model);
    RunConfig c = default_config(model);
    const SystemModel m = make_model(model);
    const auto& names = m.parameters.names;

    if (root.has("parameters")) parse_named_values(root.at("parameters"), "config.parameters", names, c.parameters);
    if (root.has("bounds")) {
        Section s(root.at("bounds"), "config.bounds");
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!s.has(names[i].c_str())) continue;
            const json& v = s.at(names[i].c_str());
            if (v.is_null()) {
                c.bounds[i] = std::nullopt;
                continue;
            }
            const Vec lh = Section::numbers(v, s.where(names[i]));
            if (lh.size() != 2) throw InputError(s.where(names[i]) + ": expected [lower, upper] or null");
            c.bounds[i] = Bounds{lh[0], lh[1]};
        }
        s.finish();
    }
    root.read("initial_state", c.initial_state);
    if (root.has("simulation")) {
        Section s(root.at("simulation"), "config.simulation");
        s.read("t0", c.simulation.t0);
        s.read("tf", c.simulation.tf);
        s.read("dt", c.simulation.dt);
        s.read("tail_count", c.simulation.tail_count);
        s.finish();
    }
    if (root.has("loss")) {
        Section s(root.at("loss"), "config.loss");
        s.read("balance", c.balance);
        if (s.has("terms")) {
            const json& arr = s.at("terms");
            if (!arr.is_array()) throw InputError("config.loss.terms: expected an array");
            c.terms.clear();
            for (std::size_t i = 0; i < arr.size(); ++i)
                c.terms.push_back(parse_term(arr[i], "config.loss.terms[" + std::to_string(i) + "]"));
        }
        s.finish();
    }
    if (root.has("scheme")) {
        std::string scheme;
        root.read("scheme", scheme);
        c.scheme = parse_scheme(scheme);
    }
    if (root.has("gd")) {
        Section s(root.at("gd"), "config.gd");
        s.read("learning_rate", c.gd.learning_rate);
        s.read("decay_per_epoch", c.gd.decay_per_epoch);
        s.read("clip_norm", c.gd.clip_norm);
        s.read("max_epochs", c.gd.max_epochs);
        s.read("beta1", c.gd.adam.beta1);
        s.read("beta2", c.gd.adam.beta2);
        s.read("eps", c.gd.adam.eps);
        s.read("stop_lr_floor", c.gd.stop_lr_floor);
        s.read("stop_step_tol", c.gd.stop_step_tol);
        s.finish();
    }
    if (root.has("sampling")) {
        Section s(root.at("sampling"), "config.sampling");
        s.read("steps", c.sampling.steps);
        s.read("step_size", c.sampling.step_size);
        s.read("confidence_window", c.sampling.confidence_window);
        s.read("inner_budget", c.sampling.inner_budget);
        s.read("gamma0", c.sampling.gamma0);
        s.read("min_extent", c.sampling.min_extent);
        s.read("feature", c.sampling_feature);
        if (s.has("start")) {
            const json& v = s.at("start");
            if (v.is_null()) {
                c.sampling_start = std::nullopt;
            } else {
                Vec start = c.sampling_start.value_or(c.parameters);
                parse_named_values(v, "config.sampling.start", names, start);
                c.sampling_start = start;
            }
        }
        s.finish();
    }
    if (root.has("sweep")) {
        Section s(root.at("sweep"), "config.sweep");
        if (s.has("x")) c.sweep.x = parse_axis(s.at("x"), "config.sweep.x", c.sweep.x);
        if (s.has("y")) c.sweep.y = parse_axis(s.at("y"), "config.sweep.y", c.sweep.y);
        if (s.has("features")) {
            const json& arr = s.at("features");
            if (!arr.is_array()) throw InputError("config.sweep.features: expected an array");
            c.sweep.features.clear();
            for (const auto& f : arr) {
                if (!f.is_string()) throw InputError("config.sweep.features: expected strings");
                c.sweep.features.push_back(f.get<std::string>());
            }
        }
        s.finish();
    }
    if (root.has("check_grad")) {
        Section s(root.at("check_grad"), "config.check_grad");
        s.read("h", c.check_grad_h);
        s.read("tolerance", c.check_grad_tolerance);
        s.finish();
    }
    root.read("output_dir", c.output_dir);
    if (root.has("seed")) c.seed = Section::unsigned_integer(root.at("seed"), "config.seed");
    root.read("workers", c.workers);
    root.finish();
    c.validate();
    return c;
}

std::string config_to_json(const RunConfig& c) {
    const SystemModel m = make_model(c.model);
    const auto& names = m.parameters.names;
    json params = json::object(), bounds = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        params[names[i]] = c.parameters[i];
        bounds[names[i]] = c.bounds[i] ? json::array({c.bounds[i]->lower, c.bounds[i]->upper}) : json(nullptr);
    }
    json terms = json::array();
    for (const auto& t : c.terms) {
        terms.push_back(json{{"kind", t.kind}, {"dim", t.dim}, {"sign", t.sign}, {"weight", t.weight},
                             {"count", t.count}, {"normalized", t.normalized}, {"a", t.a},
                             {"margin", t.margin}, {"center", t.center}, {"radius", t.radius}});
    }
    json start = nullptr;
    if (c.sampling_start) {
        start = json::object();
        for (std::size_t i = 0; i < names.size(); ++i) start[names[i]] = (*c.sampling_start)[i];
    }
    json j{
        {"model", c.model},
        {"parameters", params},
        {"bounds", bounds},
        {"initial_state", c.initial_state},
        {"simulation",
         {{"t0", c.simulation.t0}, {"tf", c.simulation.tf}, {"dt", c.simulation.dt},
          {"tail_count", c.simulation.tail_count}}},
        {"loss", {{"balance", c.balance}, {"terms", terms}}},
        {"scheme", to_string(c.scheme)},
        {"gd",
         {{"learning_rate", c.gd.learning_rate},
          {"decay_per_epoch", c.gd.decay_per_epoch},
          {"clip_norm", c.gd.clip_norm ? json(*c.gd.clip_norm) : json(nullptr)},
          {"max_epochs", c.gd.max_epochs},
          {"beta1", c.gd.adam.beta1},
          {"beta2", c.gd.adam.beta2},
          {"eps", c.gd.adam.eps},
          {"stop_lr_floor", c.gd.stop_lr_floor},
          {"stop_step_tol", c.gd.stop_step_tol}}},
        {"sampling",
         {{"steps", c.sampling.steps},
          {"step_size", c.sampling.step_size},
          {"confidence_window", c.sampling.confidence_window},
          {"inner_budget", c.sampling.inner_budget},
          {"gamma0", c.sampling.gamma0},
          {"min_extent", c.sampling.min_extent ? json(*c.sampling.min_extent) : json(nullptr)},
          {"feature", c.sampling_feature},
          {"start", start}}},
        {"sweep", {{"x", axis_json(c.sweep.x)}, {"y", axis_json(c.sweep.y)}, {"features", c.sweep.features}}},
        {"check_grad", {{"h", c.check_grad_h}, {"tolerance", c.check_grad_tolerance}}},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
        {"workers", c.workers},
    };
    return j.dump(2) + "\n";
}

}  // namespace topnav
