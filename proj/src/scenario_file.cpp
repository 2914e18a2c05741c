#include "totstab/scenario_file.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace totstab {

using namespace detail;

namespace {

const std::set<std::string> kTopKeys{"version", "space",     "measures",     "kernels", "loss", "solver",
                                     "scenarios", "random", "kernel_pairs", "train",   "output"};

Json grid_override(Json spec, std::optional<int> resolution) {
    if (!resolution) return spec;
    if (!spec.is_object() || !spec.contains("grid"))
        throw SchemaError("/space", "--grid-resolution needs a grid space spec");
    spec["grid"]["resolution"] = *resolution;
    return spec;
}

std::vector<Atom> atoms_from_json(const Json& j, const std::string& ptr) {
    as_array(j, ptr);
    std::vector<Atom> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string ip = child(ptr, i);
        if (!j[i].is_array() || j[i].size() != 2) throw SchemaError(ip, "expected [x_index, y]");
        out.push_back({as_int(j[i][0], child(ip, 0)), as_double(j[i][1], child(ip, 1))});
    }
    return out;
}

class MeasureResolver {
public:
    MeasureResolver(const Json& specs, const GroundSpace& space) : specs_(specs), space_(space) {}

    const DiscreteMeasure& get(const std::string& name, const std::string& from) {
        auto it = done_.find(name);
        if (it != done_.end()) return it->second;
        if (!specs_.contains(name)) throw SchemaError(from, "unknown measure '" + name + "'");
        if (active_.count(name)) throw SchemaError(child("/measures", name), "contamination cycle");
        active_.insert(name);
        const std::string ptr = child("/measures", name);
        DiscreteMeasure m = build(specs_[name], ptr);
        active_.erase(name);
        return done_.emplace(name, std::move(m)).first->second;
    }

    std::map<std::string, DiscreteMeasure> all() {
        for (auto it = specs_.begin(); it != specs_.end(); ++it) get(it.key(), "/measures");
        return done_;
    }

private:
    DiscreteMeasure build(const Json& j, const std::string& ptr) {
        if (!j.is_object()) throw SchemaError(ptr, "expected a measure object");
        if (!j.contains("contaminate")) return measure_from_json(j, space_, ptr);
        const std::string cp = child(ptr, "contaminate");
        const Json& c = j["contaminate"];
        const std::string base_name = as_string(require(c, "base", cp), child(cp, "base"));
        const DiscreteMeasure& base = get(base_name, child(cp, "base"));
        std::vector<Atom> repl = atoms_from_json(require(c, "replacements", cp), child(cp, "replacements"));
        if (c.contains("positions")) {
            std::vector<int> pos = as_int_vector(c["positions"], child(cp, "positions"));
            return at_pointer(cp, [&] { return contaminate(base, pos, repl); });
        }
        int ell = c.contains("ell") ? as_int(c["ell"], child(cp, "ell")) : static_cast<int>(repl.size());
        return at_pointer(cp, [&] { return contaminate(base, ell, repl); });
    }

    const Json& specs_;
    const GroundSpace& space_;
    std::map<std::string, DiscreteMeasure> done_;
    std::set<std::string> active_;
};

template <class T>
const T& lookup(const std::map<std::string, T>& m, const std::string& name, const std::string& ptr, const char* what) {
    auto it = m.find(name);
    if (it == m.end()) throw SchemaError(ptr, std::string("unknown ") + what + " '" + name + "'");
    return it->second;
}

Triple triple_from_json(const ScenarioFile& f, const Json& j, const std::string& ptr) {
    const std::string mname = as_string(require(j, "measure", ptr), child(ptr, "measure"));
    const std::string kname = as_string(require(j, "kernel", ptr), child(ptr, "kernel"));
    double lambda = get_double(j, "lambda", ptr);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw SchemaError(child(ptr, "lambda"), "lambda must be positive");
    return Triple{lookup(f.measures, mname, child(ptr, "measure"), "measure"), lambda,
                  lookup(f.kernels, kname, child(ptr, "kernel"), "kernel")};
}

AnyLoss scenario_loss(const ScenarioFile& f, const Json& j, const std::string& ptr) {
    if (j.contains("loss")) return loss_from_json(j["loss"], child(ptr, "loss"));
    if (!f.loss) throw SchemaError(child(ptr, "loss"), "no loss given and no top-level loss");
    return *f.loss;
}

void add_scenarios(ScenarioFile& f, const Json& j, const std::string& ptr) {
    Triple first = triple_from_json(f, require(j, "first", ptr), child(ptr, "first"));
    Triple second = triple_from_json(f, require(j, "second", ptr), child(ptr, "second"));
    AnyLoss loss = scenario_loss(f, j, ptr);
    std::optional<double> s = opt_double(j, "s", ptr);
    std::string name = j.contains("name") ? as_string(j["name"], child(ptr, "name")) : ptr;

    std::vector<std::pair<std::string, std::string>> theorems; // value, pointer
    if (j.contains("theorems")) {
        const std::string tp = child(ptr, "theorems");
        const Json& ts = as_array(j["theorems"], tp);
        for (std::size_t i = 0; i < ts.size(); ++i) theorems.emplace_back(as_string(ts[i], child(tp, i)), child(tp, i));
    } else {
        theorems.emplace_back(as_string(require(j, "theorem", ptr), child(ptr, "theorem")), child(ptr, "theorem"));
    }
    for (const auto& [tname, tp] : theorems) {
        Theorem t = at_pointer(tp, [&] { return theorem_from_string(tname); });
        Scenario sc{theorems.size() > 1 ? name + "/" + tname : name, first, second, loss, t, s};
        // a loss lacking the constants the theorem needs is an input error
        at_pointer(ptr, [&] { return constants_for(sc); });
        f.scenarios.push_back(std::move(sc));
    }
}

RandomScenarioConfig random_config(const Json& j, const std::string& ptr) {
    RandomScenarioConfig c;
    auto int_field = [&](const char* key, int& out) {
        if (j.contains(key)) out = as_int(j[key], child(ptr, key));
    };
    auto dbl_field = [&](const char* key, double& out) {
        if (j.contains(key)) out = as_double(j[key], child(ptr, key));
    };
    auto bool_field = [&](const char* key, bool& out) {
        if (j.contains(key)) out = as_bool(j[key], child(ptr, key));
    };
    int_field("max_points", c.max_points);
    int_field("max_atoms", c.max_atoms);
    dbl_field("lambda_min", c.lambda_min);
    dbl_field("lambda_max", c.lambda_max);
    bool_field("small_lambda", c.small_lambda);
    bool_field("perturb_measure", c.perturb_measure);
    bool_field("perturb_lambda", c.perturb_lambda);
    bool_field("perturb_kernel", c.perturb_kernel);
    bool_field("hierarchical", c.hierarchical);
    if (j.contains("loss")) c.loss_name = as_string(j["loss"], child(ptr, "loss"));
    return c;
}

} // namespace

ScenarioFile load_scenario_file(const Json& j, std::uint64_t seed, std::optional<int> grid_resolution) {
    if (!j.is_object()) throw SchemaError("/", "scenario file must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!kTopKeys.count(it.key())) throw SchemaError(child("", it.key()), "unknown top-level field");
    int version = as_int(require(j, "version", ""), "/version");
    if (version != 1) throw SchemaError("/version", "unsupported version " + std::to_string(version));

    Json space_spec = grid_override(require(j, "space", ""), grid_resolution);
    ScenarioFile f(space_from_json(space_spec, "/space"));
    f.version = version;
    f.space_spec = space_spec;

    if (j.contains("solver")) f.options = options_from_json(j["solver"], "/solver");
    if (j.contains("loss")) f.loss = loss_from_json(j["loss"], "/loss");
    if (j.contains("output")) f.output = as_string(j["output"], "/output");

    if (j.contains("measures")) {
        if (!j["measures"].is_object()) throw SchemaError("/measures", "expected an object of named measures");
        MeasureResolver resolver(j["measures"], f.space);
        f.measures = resolver.all();
    }
    if (j.contains("kernels")) {
        const Json& ks = j["kernels"];
        if (!ks.is_object()) throw SchemaError("/kernels", "expected an object of named kernels");
        for (auto it = ks.begin(); it != ks.end(); ++it) {
            const std::string kp = child("/kernels", it.key());
            Kernel k = kernel_from_json(it.value(), &f.space, kp);
            if (k.dim() >= 0 && k.dim() != f.space.dim())
                throw SchemaError(kp, "kernel dimension " + std::to_string(k.dim()) + " does not match the space");
            f.kernels.emplace(it.key(), std::move(k));
        }
    }
    if (j.contains("scenarios")) {
        const Json& ss = as_array(j["scenarios"], "/scenarios");
        for (std::size_t i = 0; i < ss.size(); ++i) add_scenarios(f, ss[i], child("/scenarios", i));
    }
    if (j.contains("random")) {
        const Json& rs = as_array(j["random"], "/random");
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const std::string rp = child("/random", i);
            const std::string tp = child(rp, "theorem");
            std::string tname = as_string(require(rs[i], "theorem", rp), tp);
            Theorem t = at_pointer(tp, [&] { return theorem_from_string(tname); });
            int count = as_int(require(rs[i], "count", rp), child(rp, "count"));
            if (count < 0) throw SchemaError(child(rp, "count"), "count must be nonnegative");
            RandomScenarioConfig cfg = random_config(rs[i], rp);
            auto gen = at_pointer(rp, [&] { return random_scenarios(t, count, seed + i, cfg); });
            for (auto& sc : gen) f.scenarios.push_back(std::move(sc));
        }
    }
    if (j.contains("kernel_pairs")) {
        const Json& ps = as_array(j["kernel_pairs"], "/kernel_pairs");
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const std::string pp = child("/kernel_pairs", i);
            KernelPair kp;
            kp.first = as_string(require(ps[i], "k1", pp), child(pp, "k1"));
            kp.second = as_string(require(ps[i], "k2", pp), child(pp, "k2"));
            lookup(f.kernels, kp.first, child(pp, "k1"), "kernel");
            lookup(f.kernels, kp.second, child(pp, "k2"), "kernel");
            kp.name = ps[i].contains("name") ? as_string(ps[i]["name"], child(pp, "name")) : kp.first + "-" + kp.second;
            kp.a = opt_double(ps[i], "a", pp);
            f.kernel_pairs.push_back(std::move(kp));
        }
    }
    if (j.contains("train")) {
        const Json& t = j["train"];
        TrainSpec ts;
        ts.measure = as_string(require(t, "measure", "/train"), "/train/measure");
        ts.kernel = as_string(require(t, "kernel", "/train"), "/train/kernel");
        lookup(f.measures, ts.measure, "/train/measure", "measure");
        lookup(f.kernels, ts.kernel, "/train/kernel", "kernel");
        ts.lambda = get_double(t, "lambda", "/train");
        if (!(ts.lambda > 0.0) || !std::isfinite(ts.lambda))
            throw SchemaError("/train/lambda", "lambda must be positive");
        ts.loss = scenario_loss(f, t, "/train");
        f.train = std::move(ts);
    }
    return f;
}

ScenarioFile load_scenario_file_path(const std::string& path, std::uint64_t seed, std::optional<int> grid_resolution) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError("/", std::string("invalid JSON: ") + e.what());
    }
    return load_scenario_file(j, seed, grid_resolution);
}

bool KernelDistance::within_bound() const {
    if (!bound) return true;
    // analytic bounds are compared against floating-point kernel evaluations
    return measured <= *bound * (1.0 + 1e-12) + 1e-15;
}

KernelDistance kernel_distance(const ScenarioFile& f, const KernelPair& pair) {
    const Kernel& k1 = lookup(f.kernels, pair.first, "/kernel_pairs", "kernel");
    const Kernel& k2 = lookup(f.kernels, pair.second, "/kernel_pairs", "kernel");
    KernelDistance out;
    out.name = pair.name;
    out.family = "other";
    out.measured = sup_distance(k1, k2, f.space);
    const auto* g1 = std::get_if<GaussianRbf>(&k1.variant());
    const auto* g2 = std::get_if<GaussianRbf>(&k2.variant());
    const auto* h1 = std::get_if<HierarchicalGaussian>(&k1.variant());
    const auto* h2 = std::get_if<HierarchicalGaussian>(&k2.variant());
    if (g1 && g2) {
        out.family = "gaussian";
        double a = pair.a.value_or(std::min(g1->gamma, g2->gamma));
        out.bound = gaussian_bandwidth_bound(g1->gamma, g2->gamma, a, f.space.diameter());
    } else if (h1 && h2) {
        out.family = "hierarchical";
        out.bound = hierarchical_perturbation_bound(h1->params, h2->params, f.space.diameter());
    }
    if (out.bound) {
        if (*out.bound > 0.0)
            out.ratio = out.measured / *out.bound;
        else if (out.measured == 0.0)
            out.ratio = 0.0;
    }
    return out;
}

} // namespace totstab
