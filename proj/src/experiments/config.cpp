#include <nhflow/experiments.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace nhflow::experiments {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config " + path + ": " + msg, path);
}

const json* child(const json& node, const std::string& key) {
    auto it = node.find(key);
    return it == node.end() ? nullptr : &*it;
}

double get_number(const json& node, const std::string& key, const std::string& path, double fallback) {
    const json* v = child(node, key);
    if (!v) return fallback;
    if (!v->is_number()) fail(path + "/" + key, "expected a number");
    return v->get<double>();
}

std::size_t get_count(const json& node, const std::string& key, const std::string& path, std::size_t fallback) {
    const json* v = child(node, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        fail(path + "/" + key, "expected a nonnegative integer");
    return v->get<std::size_t>();
}

std::string get_string(const json& node, const std::string& key, const std::string& path, const std::string& fallback) {
    const json* v = child(node, key);
    if (!v) return fallback;
    if (!v->is_string()) fail(path + "/" + key, "expected a string");
    return v->get<std::string>();
}

cplx get_complex(const json& node, const std::string& key, const std::string& path, cplx fallback) {
    const json* v = child(node, key);
    if (!v) return fallback;
    if (v->is_number()) return v->get<double>();
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        fail(path + "/" + key, "expected a number or [re, im]");
    return {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

void check_keys(const json& node, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!node.is_object()) fail(path.empty() ? "/" : path, "expected an object");
    for (auto it = node.begin(); it != node.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) fail(path + "/" + it.key(), "unknown field");
    }
}

FunctionSpec parse_function(const json& node, const std::string& path) {
    check_keys(node, path, {"id", "shape", "center", "width", "amplitude", "mode"});
    FunctionSpec f;
    f.id = get_string(node, "id", path, "");
    if (f.id.empty()) fail(path + "/id", "function id is required");
    f.shape = get_string(node, "shape", path, f.shape);
    if (f.shape != "gaussian" && f.shape != "angular-mode") fail(path + "/shape", "expected gaussian or angular-mode");
    f.center = get_complex(node, "center", path, f.center);
    f.width = get_number(node, "width", path, f.width);
    if (!(f.width > 0.0)) fail(path + "/width", "must be positive");
    f.amplitude = get_number(node, "amplitude", path, f.amplitude);
    f.mode = static_cast<int>(get_count(node, "mode", path, 1));
    return f;
}

std::string line_col_message(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& col) {
    line = 1;
    col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

kernels::TestFunction build_function(const FunctionSpec& spec) {
    if (spec.shape == "angular-mode") return kernels::TestFunction::angular_mode(spec.id, spec.width, spec.mode, spec.amplitude);
    return kernels::TestFunction::gaussian(spec.id, spec.center, spec.width, spec.amplitude);
}

double MesoscopicScaling::physical_time(double s, std::size_t N) const {
    return T + std::pow(static_cast<double>(N), -2.0 * a) * s;
}

sampling::EntryDistribution ExperimentConfig::entry_distribution() const {
    return sampling::EntryDistribution::from_name(distribution, kappa4);
}

const FunctionSpec& ExperimentConfig::function(const std::string& id) const {
    for (const auto& f : functions)
        if (f.id == id) return f;
    throw ConfigError("config: unknown function id '" + id + "'", "/functions");
}

const json* ExperimentConfig::param_node(const std::string& key) const { return child(params, key); }

double ExperimentConfig::param(const std::string& key, double fallback) const {
    return get_number(params, key, "/params", fallback);
}

std::size_t ExperimentConfig::param_size(const std::string& key, std::size_t fallback) const {
    return get_count(params, key, "/params", fallback);
}

std::string ExperimentConfig::param_string(const std::string& key, const std::string& fallback) const {
    return get_string(params, key, "/params", fallback);
}

std::vector<std::string> experiment_ids() {
    return {"covariance", "variance-split", "wick", "overlaps", "girko", "dbm-coupling", "dbm-relaxation",
            "hard-edge", "kernels-selftest"};
}

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "", {"experiment", "seed", "replicas", "batch_size", "threads", "ensemble", "times", "functions",
                         "quadrature", "mesoscopic", "params", "output"});
    ExperimentConfig cfg;
    cfg.experiment = get_string(doc, "experiment", "", "");
    bool known = false;
    for (const auto& id : experiment_ids()) known = known || id == cfg.experiment;
    if (!known) fail("/experiment", "unknown experiment '" + cfg.experiment + "'");
    cfg.seed = static_cast<std::uint64_t>(get_count(doc, "seed", "", 1));
    cfg.replicas = get_count(doc, "replicas", "", cfg.replicas);
    cfg.batch_size = get_count(doc, "batch_size", "", 0);
    cfg.threads = get_count(doc, "threads", "", 1);

    if (const json* e = child(doc, "ensemble")) {
        check_keys(*e, "/ensemble", {"N", "distribution", "kappa4", "start"});
        cfg.N = get_count(*e, "N", "/ensemble", cfg.N);
        cfg.distribution = get_string(*e, "distribution", "/ensemble", cfg.distribution);
        cfg.kappa4 = get_number(*e, "kappa4", "/ensemble", 0.0);
        cfg.start = get_string(*e, "start", "/ensemble", cfg.start);
    }
    if (cfg.N < 2) fail("/ensemble/N", "must be at least 2");
    if (cfg.start != "equilibrium" && cfg.start != "iid") fail("/ensemble/start", "expected equilibrium or iid");
    try {
        (void)cfg.entry_distribution();
    } catch (const std::invalid_argument& ex) {
        fail("/ensemble/distribution", ex.what());
    }

    if (const json* t = child(doc, "times")) {
        if (!t->is_array()) fail("/times", "expected an array");
        for (std::size_t k = 0; k < t->size(); ++k) {
            if (!(*t)[k].is_number() || (*t)[k].get<double>() < 0.0)
                fail("/times/" + std::to_string(k), "expected a nonnegative number");
            cfg.times.push_back((*t)[k].get<double>());
        }
    }
    if (const json* fs = child(doc, "functions")) {
        if (!fs->is_array()) fail("/functions", "expected an array");
        for (std::size_t k = 0; k < fs->size(); ++k) {
            auto f = parse_function((*fs)[k], "/functions/" + std::to_string(k));
            for (const auto& g : cfg.functions)
                if (g.id == f.id) fail("/functions/" + std::to_string(k) + "/id", "duplicate id '" + f.id + "'");
            cfg.functions.push_back(f);
        }
    }
    if (const json* q = child(doc, "quadrature")) {
        check_keys(*q, "/quadrature", {"radial", "angular", "scheme"});
        cfg.grid.radial = static_cast<int>(get_count(*q, "radial", "/quadrature", cfg.grid.radial));
        cfg.grid.angular = static_cast<int>(get_count(*q, "angular", "/quadrature", cfg.grid.angular));
        const auto scheme = get_string(*q, "scheme", "/quadrature", "polar-gauss");
        if (scheme == "tensor-midpoint")
            cfg.grid.scheme = kernels::QuadratureGrid::Scheme::TensorMidpoint;
        else if (scheme != "polar-gauss")
            fail("/quadrature/scheme", "expected polar-gauss or tensor-midpoint");
    }
    if (const json* m = child(doc, "mesoscopic")) {
        check_keys(*m, "/mesoscopic", {"a", "v", "T"});
        MesoscopicScaling s;
        s.a = get_number(*m, "a", "/mesoscopic", 0.0);
        s.v = get_complex(*m, "v", "/mesoscopic", 0.0);
        s.T = get_number(*m, "T", "/mesoscopic", 0.0);
        if (!(s.a >= 0.0 && s.a < 0.5)) fail("/mesoscopic/a", "must lie in [0, 1/2)");
        if (!(std::abs(s.v) < 1.0)) fail("/mesoscopic/v", "must lie inside the unit disk");
        cfg.mesoscopic = s;
    }
    if (const json* p = child(doc, "params")) {
        if (!p->is_object()) fail("/params", "expected an object");
        cfg.params = *p;
    }
    // the output directory is a run-time choice, not part of the experiment's identity
    cfg.source = doc;
    cfg.source.erase("output");
    cfg.source.erase("threads");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& ex) {
        std::size_t line = 0, col = 0;
        const auto where = line_col_message(text, ex.byte > 0 ? ex.byte - 1 : 0, line, col);
        throw ConfigError("config " + path + ": syntax error at " + where + ": " + ex.what(), {}, line, col);
    }
    return parse_config(doc);
}

namespace {

json gaussian_fn(const char* id, double re, double im, double width) {
    return {{"id", id}, {"center", {re, im}}, {"width", width}};
}

}  // namespace

json default_document(const std::string& experiment) {
    if (experiment == "covariance") {
        return {{"experiment", experiment},
                {"seed", 7},
                {"replicas", 2000},
                {"ensemble", {{"N", 128}, {"distribution", "complex-gaussian"}, {"start", "equilibrium"}}},
                {"functions", {gaussian_fn("f", 0.25, 0.0, 0.2), gaussian_fn("g", -0.2, 0.15, 0.2)}},
                {"params",
                 {{"threshold", 4.0},
                  {"pairs",
                   {{{"f", "f"}, {"s", 0.0}, {"g", "f"}, {"t", 0.05}},
                    {{"f", "f"}, {"s", 0.0}, {"g", "g"}, {"t", 0.05}},
                    {{"f", "f"}, {"s", 0.0}, {"g", "f"}, {"t", 0.2}},
                    {{"f", "f"}, {"s", 0.0}, {"g", "g"}, {"t", 0.2}},
                    {{"f", "g"}, {"s", 0.0}, {"g", "g"}, {"t", 0.2}}}}}}};
    }
    if (experiment == "variance-split") {
        return {{"experiment", experiment},
                {"seed", 11},
                {"ensemble", {{"N", 128}, {"distribution", "complex-gaussian"}, {"start", "equilibrium"}}},
                {"functions", {gaussian_fn("f", 0.2, 0.0, 0.25)}},
                {"params",
                 {{"function", "f"}, {"s", 0.0}, {"t", 0.1}, {"outer", 200}, {"inner", 50}, {"threshold", 4.0}}}};
    }
    if (experiment == "wick") {
        return {{"experiment", experiment},
                {"seed", 13},
                {"replicas", 10000},
                {"ensemble", {{"N", 128}, {"distribution", "complex-gaussian"}, {"start", "equilibrium"}}},
                {"times", {0.0}},
                {"functions", {gaussian_fn("f", 0.2, 0.0, 0.25)}},
                {"params", {{"function", "f"}, {"bootstrap", 400}, {"threshold", 4.0}, {"chi2_dof", 8}}}};
    }
    if (experiment == "overlaps") {
        return {{"experiment", experiment},
                {"seed", 17},
                {"replicas", 500},
                {"ensemble", {{"N", 256}, {"distribution", "complex-gaussian"}, {"start", "equilibrium"}}},
                {"functions", {gaussian_fn("f", 0.0, 0.0, 1.0), gaussian_fn("g", 1.2, 0.0, 1.0)}},
                {"params",
                 {{"bulk_windows", {{{"v", {0.0, 0.0}}, {"radius", 0.1}},
                                    {{"v", {0.3, 0.0}}, {"radius", 0.1}},
                                    {{"v", {0.0, 0.5}}, {"radius", 0.1}},
                                    {{"v", {-0.6, 0.0}}, {"radius", 0.1}}}},
                  {"mean_tolerance", 0.1},
                  {"slope", {{"radius", 0.75}, {"d0_sqrtN", 2.0}, {"bins", 3}, {"target", -4.0}, {"tolerance", 0.5}}},
                  {"dynamic",
                   {{"enabled", true},
                    {"replicas", 100},
                    {"f", "f"},
                    {"g", "g"},
                    {"a", 0.25},
                    {"v", {0.0, 0.0}},
                    {"s_window", {0.0, 1.0}},
                    {"t_window", {2.0, 3.0}},
                    {"points", 2},
                    {"threshold", 4.0}}}}}};
    }
    if (experiment == "girko") {
        return {{"experiment", experiment},
                {"seed", 19},
                {"ensemble", {{"N", 128}, {"distribution", "complex-gaussian"}, {"start", "equilibrium"}}},
                {"functions", {gaussian_fn("f", 0.0, 0.0, 0.3)}},
                {"params",
                 {{"function", "f"},
                  {"N_values", {64, 128, 256}},
                  {"replicas_per_N", {200, 100, 50}},
                  {"a", 0.1},
                  {"v", {0.0, 0.0}},
                  {"delta0", 0.5},
                  {"delta1", 0.25},
                  {"T", 1e3},
                  {"node_density", 0.5},
                  {"support_widths", 4.5},
                  {"decorrelation",
                   {{"N", 128}, {"replicas", 400}, {"z1", {-0.25, 0.0}}, {"z2", {0.25, 0.0}}, {"delta", 0.25}}}}}};
    }
    if (experiment == "dbm-coupling") {
        return {{"experiment", experiment},
                {"seed", 23},
                {"replicas", 40},
                {"ensemble", {{"N", 256}, {"distribution", "complex-gaussian"}}},
                {"params",
                 {{"omega_K", 0.4},
                  {"omega_eps", 0.3},
                  {"t_exponent", -0.8},
                  {"i_max", 20},
                  {"dt", 1e-5},
                  {"z", {0.0, 0.0}},
                  {"init_seed", 11},
                  {"median_bound", 0.5}}}};
    }
    if (experiment == "dbm-relaxation") {
        return {{"experiment", experiment},
                {"seed", 1},
                {"replicas", 100},
                {"ensemble", {{"N", 128}, {"distribution", "complex-gaussian"}}},
                {"params",
                 {{"second_distribution", "uniform-phase"},
                  {"z", {0.3, 0.0}},
                  {"init_seeds", {1, 2}},
                  {"t_exponents", {-0.8, -0.2}},
                  {"t_points", 8},
                  {"indices", {1, 2, 4, 8}},
                  {"dt", 1e-4},
                  {"max_exceed_fraction", 0.05},
                  {"slope_target", -0.5},
                  {"slope_tolerance", 0.15}}}};
    }
    if (experiment == "hard-edge") {
        return {{"experiment", experiment},
                {"seed", 29},
                {"replicas", 2000},
                {"ensemble", {{"N", 256}, {"distribution", "uniform-phase"}}},
                {"params", {{"t_exponent", -0.7}, {"z", {{-0.25, 0.0}, {0.25, 0.0}}}, {"ks_bound", 0.08}}}};
    }
    if (experiment == "kernels-selftest") return {{"experiment", experiment}, {"seed", 1}};
    throw ConfigError("config: unknown experiment '" + experiment + "'", "/experiment");
}

ExperimentConfig default_config(const std::string& experiment) { return parse_config(default_document(experiment)); }

}  // namespace nhflow::experiments
