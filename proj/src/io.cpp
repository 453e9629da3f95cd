#include "topnav/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace topnav {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v) {
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw InputError("expected a number or null");
    return v.get<double>();
}

json numbers_json(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(number_or_null(x));
    return a;
}

std::string join_flags(std::uint32_t flags) {
    std::string out;
    for (const auto& n : flag_names(flags)) {
        if (!out.empty()) out += '|';
        out += n;
    }
    return out;
}

std::string edge_field(const std::optional<Edge>& e, bool first) {
    if (!e) return "";
    return std::to_string(first ? e->i : e->j);
}

json features_json(const FeatureSummary& f) {
    return json{{"maxPers1", f.max_pers1},
                {"totPers1", f.tot_pers1},
                {"entropy1", f.entropy1 ? json(*f.entropy1) : json(nullptr)},
                {"h1_count", f.h1_count}};
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_names) {
    if (state_names.size() != traj.states.cols) throw InputError("trajectory_csv: state name count mismatch");
    std::string out = "t";
    for (const auto& n : state_names) out += "," + n;
    out += '\n';
    for (std::size_t r = 0; r < traj.size(); ++r) {
        out += format_number(traj.times[r]);
        for (double x : traj.states.row(r)) out += "," + format_number(x);
        out += '\n';
    }
    return out;
}

std::string diagram_csv(const PersistenceDiagram& diag) {
    std::string out = "dim,birth,death,birth_i,birth_j,death_k,death_l\n";
    for (const auto& p : diag.pairs) {
        out += std::to_string(p.dim) + "," + format_number(p.birth) + "," + format_number(p.death) + "," +
               edge_field(p.birth_edge, true) + "," + edge_field(p.birth_edge, false) + "," +
               edge_field(p.death_edge, true) + "," + edge_field(p.death_edge, false) + "\n";
    }
    return out;
}

std::string diagram_json(const PersistenceDiagram& diag) {
    json pairs = json::array();
    for (const auto& p : diag.pairs) {
        auto edge = [](const std::optional<Edge>& e) { return e ? json::array({e->i, e->j}) : json(nullptr); };
        pairs.push_back(json{{"dim", p.dim},
                             {"birth", p.birth},
                             {"death", number_or_null(p.death)},
                             {"birth_edge", edge(p.birth_edge)},
                             {"death_edge", edge(p.death_edge)}});
    }
    json j{{"schema_version", kSchemaVersion},
           {"kind", "persistence_diagram"},
           {"max_dim", diag.max_dim},
           {"threshold", diag.threshold},
           {"pairs", pairs}};
    return j.dump(2) + "\n";
}

std::string path_csv(const PathRecord& path) {
    std::string out = "epoch";
    for (const auto& n : path.param_names) out += "," + n;
    out += ",loss";
    for (std::size_t k = 0; k < path.term_labels.size(); ++k)
        out += ",term" + std::to_string(k) + "_" + path.term_labels[k];
    out += ",maxPers1,totPers1,entropy1,h1_count,grad_norm,step_grad_norm,learning_rate,flags\n";
    for (const auto& s : path.steps) {
        out += std::to_string(s.epoch);
        for (double m : s.mu) out += "," + format_number(m);
        out += "," + format_number(s.loss);
        for (std::size_t k = 0; k < path.term_labels.size(); ++k)
            out += "," + (k < s.term_values.size() ? format_number(s.term_values[k]) : std::string("nan"));
        out += "," + format_number(s.features.max_pers1) + "," + format_number(s.features.tot_pers1) + "," +
               (s.features.entropy1 ? format_number(*s.features.entropy1) : std::string("nan")) + "," +
               std::to_string(s.features.h1_count) + "," + format_number(s.grad_norm) + "," +
               format_number(s.step_grad_norm) + "," + format_number(s.learning_rate) + "," + join_flags(s.flags) +
               "\n";
    }
    return out;
}

std::string regions_csv(const PathRecord& path) {
    std::string out = "step";
    for (const auto& n : path.param_names) out += "," + n + "_lower";
    for (const auto& n : path.param_names) out += "," + n + "_upper";
    out += ",area,confidence\n";
    for (const auto& s : path.steps) {
        if (!s.region) continue;
        out += std::to_string(s.epoch);
        for (double v : s.region->lower) out += "," + format_number(v);
        for (double v : s.region->upper) out += "," + format_number(v);
        out += "," + format_number(s.region->area()) + "," +
               (s.confidence ? format_number(*s.confidence) : std::string("nan")) + "\n";
    }
    return out;
}

std::string path_json(const PathRecord& path) {
    json steps = json::array();
    for (const auto& s : path.steps) {
        json region = nullptr;
        if (s.region) region = json{{"lower", numbers_json(s.region->lower)}, {"upper", numbers_json(s.region->upper)}};
        steps.push_back(json{{"epoch", s.epoch},
                             {"mu", numbers_json(s.mu)},
                             {"loss", number_or_null(s.loss)},
                             {"term_values", numbers_json(s.term_values)},
                             {"features", features_json(s.features)},
                             {"grad_norm", number_or_null(s.grad_norm)},
                             {"step_grad_norm", number_or_null(s.step_grad_norm)},
                             {"learning_rate", s.learning_rate},
                             {"flags", flag_names(s.flags)},
                             {"region", region},
                             {"confidence", s.confidence ? json(*s.confidence) : json(nullptr)},
                             {"note", s.note}});
    }
    json j{{"schema_version", kSchemaVersion},
           {"kind", "path"},
           {"param_names", path.param_names},
           {"term_labels", path.term_labels},
           {"termination", to_string(path.termination)},
           {"termination_detail", path.termination_detail},
           {"sampled_area", path.sampled_area},
           {"steps", steps}};
    return j.dump(2) + "\n";
}

PathRecord parse_path_json(std::string_view text) {
    PathRecord p;
    try {
        const json j = json::parse(text);
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw InputError("unsupported path schema version");
        if (j.at("kind").get<std::string>() != "path") throw InputError("document is not a path");
        p.param_names = j.at("param_names").get<std::vector<std::string>>();
        p.term_labels = j.at("term_labels").get<std::vector<std::string>>();
        const std::string term = j.at("termination").get<std::string>();
        for (auto t : {Termination::max_epochs, Termination::lr_floor, Termination::step_tol, Termination::divergence})
            if (to_string(t) == term) p.termination = t;
        p.termination_detail = j.at("termination_detail").get<std::string>();
        p.sampled_area = j.at("sampled_area").get<double>();
        auto numbers = [](const json& a) {
            Vec v;
            for (const auto& x : a) v.push_back(number_from(x));
            return v;
        };
        for (const auto& js : j.at("steps")) {
            PathStep s;
            s.epoch = js.at("epoch").get<std::size_t>();
            s.mu = numbers(js.at("mu"));
            s.loss = number_from(js.at("loss"));
            s.term_values = numbers(js.at("term_values"));
            const json& f = js.at("features");
            s.features.max_pers1 = number_from(f.at("maxPers1"));
            s.features.tot_pers1 = number_from(f.at("totPers1"));
            if (!f.at("entropy1").is_null()) s.features.entropy1 = f.at("entropy1").get<double>();
            s.features.h1_count = f.at("h1_count").get<std::size_t>();
            s.grad_norm = number_from(js.at("grad_norm"));
            s.step_grad_norm = number_from(js.at("step_grad_norm"));
            s.learning_rate = js.at("learning_rate").get<double>();
            for (const auto& name : js.at("flags")) {
                for (std::uint32_t bit = 1; bit != 0 && bit <= (1u << 16); bit <<= 1) {
                    const auto names = flag_names(bit);
                    if (!names.empty() && names.front() == name.get<std::string>()) s.flags |= bit;
                }
            }
            if (!js.at("region").is_null())
                s.region = Box{numbers(js.at("region").at("lower")), numbers(js.at("region").at("upper"))};
            if (!js.at("confidence").is_null()) s.confidence = js.at("confidence").get<double>();
            s.note = js.at("note").get<std::string>();
            p.steps.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed path document: ") + e.what());
    }
    return p;
}

std::string sweep_feature_csv(const SweepResult& sweep, const std::string& feature) {
    const Matrix& g = sweep.grid(feature);
    std::string out = sweep.axis_names[0] + "," + sweep.axis_names[1] + "," + feature + ",diverged\n";
    for (std::size_t iy = 0; iy < sweep.ny(); ++iy) {
        for (std::size_t ix = 0; ix < sweep.nx(); ++ix) {
            out += format_number(sweep.axes[0][ix]) + "," + format_number(sweep.axes[1][iy]) + "," +
                   format_number(g(iy, ix)) + "," + std::to_string(sweep.diverged[iy * sweep.nx() + ix]) + "\n";
        }
    }
    return out;
}

std::string sweep_json(const SweepResult& sweep) {
    json grids = json::object();
    for (std::size_t k = 0; k < sweep.feature_names.size(); ++k) {
        json rows = json::array();
        for (std::size_t iy = 0; iy < sweep.ny(); ++iy) rows.push_back(numbers_json(sweep.grids[k].row(iy)));
        grids[sweep.feature_names[k]] = rows;
    }
    json mask = json::array();
    for (std::size_t iy = 0; iy < sweep.ny(); ++iy) {
        json row = json::array();
        for (std::size_t ix = 0; ix < sweep.nx(); ++ix) row.push_back(sweep.diverged[iy * sweep.nx() + ix]);
        mask.push_back(row);
    }
    json j{{"schema_version", kSchemaVersion},
           {"kind", "sweep"},
           {"model", sweep.model},
           {"axes",
            json::array({json{{"name", sweep.axis_names[0]}, {"index", sweep.axis_index[0]}, {"values", sweep.axes[0]}},
                         json{{"name", sweep.axis_names[1]}, {"index", sweep.axis_index[1]}, {"values", sweep.axes[1]}}})},
           {"base_mu", sweep.base_mu},
           {"features", sweep.feature_names},
           {"grids", grids},
           {"diverged", mask}};
    return j.dump() + "\n";
}

SweepResult parse_sweep_json(std::string_view text) {
    SweepResult s;
    try {
        const json j = json::parse(text);
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw InputError("unsupported sweep schema version");
        if (j.at("kind").get<std::string>() != "sweep") throw InputError("document is not a sweep");
        s.model = j.at("model").get<std::string>();
        const json& axes = j.at("axes");
        if (!axes.is_array() || axes.size() != 2) throw InputError("sweep needs two axes");
        for (std::size_t a = 0; a < 2; ++a) {
            s.axis_names[a] = axes[a].at("name").get<std::string>();
            s.axis_index[a] = axes[a].at("index").get<std::size_t>();
            s.axes[a] = axes[a].at("values").get<Vec>();
        }
        s.base_mu = j.at("base_mu").get<Vec>();
        s.feature_names = j.at("features").get<std::vector<std::string>>();
        for (const auto& f : s.feature_names) {
            const json& rows = j.at("grids").at(f);
            Matrix g(s.ny(), s.nx());
            if (rows.size() != s.ny()) throw InputError("sweep grid '" + f + "' has the wrong row count");
            for (std::size_t iy = 0; iy < s.ny(); ++iy) {
                if (rows[iy].size() != s.nx()) throw InputError("sweep grid '" + f + "' has the wrong column count");
                for (std::size_t ix = 0; ix < s.nx(); ++ix) g(iy, ix) = number_from(rows[iy][ix]);
            }
            s.grids.push_back(std::move(g));
        }
        const json& mask = j.at("diverged");
        for (const auto& row : mask)
            for (const auto& v : row) s.diverged.push_back(static_cast<std::uint8_t>(v.get<int>() != 0));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed sweep document: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace topnav
