#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "topnav/commands.hpp"
#include "topnav/config.hpp"
#include "topnav/io.hpp"
#include "topnav/sweep.hpp"

namespace py = pybind11;
using namespace topnav;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PointCloud to_cloud(const Array& points) {
    if (points.ndim() != 2) throw InputError("points must be a 2-d array (N, dim)");
    PointCloud c;
    c.points = Matrix(static_cast<std::size_t>(points.shape(0)), static_cast<std::size_t>(points.shape(1)));
    std::copy(points.data(), points.data() + points.size(), c.points.data.begin());
    return c;
}

Vec to_vec(const Array& a) {
    if (a.ndim() != 1) throw InputError("expected a 1-d array");
    return Vec(a.data(), a.data() + a.size());
}

Array to_array(const Matrix& m) {
    Array out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

Array to_array(const Vec& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict diagram_dict(const PersistenceDiagram& d) {
    const auto m = static_cast<py::ssize_t>(d.size());
    py::array_t<int> dim(m);
    Array birth(m), death(m);
    py::array_t<long long> birth_edge({m, py::ssize_t{2}}), death_edge({m, py::ssize_t{2}});
    auto be = birth_edge.mutable_unchecked<2>();
    auto de = death_edge.mutable_unchecked<2>();
    for (py::ssize_t k = 0; k < m; ++k) {
        const auto& p = d.pairs[static_cast<std::size_t>(k)];
        dim.mutable_data()[k] = p.dim;
        birth.mutable_data()[k] = p.birth;
        death.mutable_data()[k] = p.death;
        be(k, 0) = p.birth_edge ? p.birth_edge->i : -1;
        be(k, 1) = p.birth_edge ? p.birth_edge->j : -1;
        de(k, 0) = p.death_edge ? p.death_edge->i : -1;
        de(k, 1) = p.death_edge ? p.death_edge->j : -1;
    }
    py::dict out;
    out["dim"] = dim;
    out["birth"] = birth;
    out["death"] = death;
    out["birth_edge"] = birth_edge;
    out["death_edge"] = death_edge;
    out["threshold"] = d.threshold;
    return out;
}

py::dict features_dict(const FeatureSummary& f) {
    py::dict out;
    out["maxPers1"] = f.max_pers1;
    out["totPers1"] = f.tot_pers1;
    out["entropy1"] = f.entropy1 ? py::cast(*f.entropy1) : py::none();
    out["h1_count"] = f.h1_count;
    return out;
}

py::dict path_dict(const PathRecord& p) {
    Matrix mu(p.steps.size(), p.param_names.size());
    Vec loss;
    for (std::size_t k = 0; k < p.steps.size(); ++k) {
        for (std::size_t i = 0; i < p.steps[k].mu.size() && i < mu.cols; ++i) mu(k, i) = p.steps[k].mu[i];
        loss.push_back(p.steps[k].loss);
    }
    py::dict out;
    out["param_names"] = p.param_names;
    out["mu"] = to_array(mu);
    out["loss"] = to_array(loss);
    out["termination"] = to_string(p.termination);
    out["sampled_area"] = p.sampled_area;
    return out;
}

RunConfig config_from(const std::string& json_text) { return parse_config(json_text); }

}  // namespace

PYBIND11_MODULE(_topnav, m) {
    m.doc() = "Persistence-guided navigation of dynamical-system parameter spaces.";

    static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
    static py::exception<DivergenceError> divergence_error(m, "DivergenceError", PyExc_RuntimeError);
    static py::exception<SingularityError> singularity_error(m, "SingularityError", PyExc_RuntimeError);
    static py::exception<UndefinedFeatureError> undefined_error(m, "UndefinedFeatureError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InputError& e) {
            py::set_error(input_error, e.what());
        } catch (const DivergenceError& e) {
            py::set_error(divergence_error, e.what());
        } catch (const SingularityError& e) {
            py::set_error(singularity_error, e.what());
        } catch (const UndefinedFeatureError& e) {
            py::set_error(undefined_error, e.what());
        }
    });

    m.def("model_names", &model_names);
    m.def(
        "model_info",
        [](const std::string& name) {
            const SystemModel s = make_model(name);
            py::dict out;
            out["state_names"] = s.state_names;
            out["param_names"] = s.parameters.names;
            out["parameters"] = to_array(s.parameters.values);
            out["initial_state"] = to_array(s.default_initial_state);
            py::list bounds;
            for (const auto& b : s.parameters.bounds)
                bounds.append(b ? py::cast(std::make_pair(b->lower, b->upper)) : py::none());
            out["bounds"] = bounds;
            return out;
        },
        py::arg("name"));

    m.def(
        "persistence",
        [](const Array& points, int max_dim) { return diagram_dict(rips_persistence(to_cloud(points), max_dim)); },
        py::arg("points"), py::arg("max_dim") = 1,
        "Rips persistence of an (N, dim) point cloud; edges are -1 where absent.");

    m.def(
        "features",
        [](const Array& points) { return features_dict(summarize(rips_persistence(to_cloud(points)))); },
        py::arg("points"));

    m.def(
        "integrate",
        [](const std::string& model, std::optional<Array> mu, std::optional<Array> x0, double t0, double tf,
           double dt) {
            const SystemModel s = make_model(model);
            const Vec p = mu ? to_vec(*mu) : s.parameters.values;
            const Vec x = x0 ? to_vec(*x0) : s.default_initial_state;
            const Trajectory t = integrate(s, p, x, SimulationConfig{t0, tf, dt, 2});
            return py::make_tuple(to_array(t.times), to_array(t.states));
        },
        py::arg("model"), py::arg("mu") = py::none(), py::arg("x0") = py::none(), py::arg("t0") = 0.0,
        py::arg("tf") = 10.0, py::arg("dt") = 0.01, "RK4 trajectory; returns (times, states).");

    m.def("default_config", [](const std::string& model) { return config_to_json(default_config(model)); },
          py::arg("model"), "Default run configuration as JSON text.");
    m.def("normalize_config", [](const std::string& text) { return config_to_json(config_from(text)); },
          py::arg("config"), "Parses a JSON config and returns it with every key filled in.");

    m.def(
        "loss_and_gradient",
        [](const std::string& config, std::optional<Array> mu) {
            const RunConfig c = config_from(config);
            const TopologicalObjective obj(c.system(), c.initial_state, c.simulation, c.loss_terms(), c.balance,
                                           c.box());
            const Vec p = mu ? to_vec(*mu) : c.parameters;
            ObjectiveResult r;
            {
                py::gil_scoped_release release;
                r = obj(p);
            }
            py::dict out;
            out["loss"] = r.loss;
            out["gradient"] = to_array(r.gradient);
            out["features"] = features_dict(r.features);
            out["flags"] = flag_names(r.flags);
            return out;
        },
        py::arg("config"), py::arg("mu") = py::none(), "Pipeline loss and adjoint gradient at mu.");

    m.def(
        "simulate",
        [](const std::string& config, const std::string& out_dir) {
            std::ostringstream log;
            SimulateOutcome o;
            {
                py::gil_scoped_release release;
                o = cmd_simulate(config_from(config), out_dir, log);
            }
            py::dict out = features_dict(o.features);
            out["diagram"] = diagram_dict(o.state.diagram);
            return out;
        },
        py::arg("config"), py::arg("out_dir"));

    m.def(
        "sweep",
        [](const std::string& config, const std::string& out_dir) {
            std::ostringstream log;
            SweepResult s;
            {
                py::gil_scoped_release release;
                s = cmd_sweep(config_from(config), out_dir, log);
            }
            py::dict grids;
            for (std::size_t k = 0; k < s.feature_names.size(); ++k) grids[py::str(s.feature_names[k])] = to_array(s.grids[k]);
            py::dict out;
            out["x"] = py::make_tuple(s.axis_names[0], to_array(s.axes[0]));
            out["y"] = py::make_tuple(s.axis_names[1], to_array(s.axes[1]));
            out["grids"] = grids;
            return out;
        },
        py::arg("config"), py::arg("out_dir"), "Feature grids; each grid has one row per y value.");

    m.def(
        "navigate",
        [](const std::string& config, const std::string& out_dir, std::optional<std::string> cached_sweep) {
            std::ostringstream log;
            PathRecord p;
            {
                py::gil_scoped_release release;
                std::optional<std::filesystem::path> cache;
                if (cached_sweep) cache = *cached_sweep;
                p = cmd_navigate(config_from(config), out_dir, cache, log);
            }
            return path_dict(p);
        },
        py::arg("config"), py::arg("out_dir"), py::arg("cached_sweep") = py::none());

    m.def(
        "check_grad",
        [](const std::string& config, const std::string& out_dir) {
            std::ostringstream log;
            GradCheckReport r;
            {
                py::gil_scoped_release release;
                r = cmd_check_grad(config_from(config), out_dir, log);
            }
            py::dict out;
            out["adjoint"] = to_array(r.adjoint);
            out["finite_difference"] = to_array(r.finite_difference);
            out["relative_error"] = r.relative_error;
            out["pass"] = r.pass;
            return out;
        },
        py::arg("config"), py::arg("out_dir"));
}
