#include "totstab/io.hpp"

#include "json_util.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace totstab {

using namespace detail;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Json node_json(const HierarchicalNode& n) {
    Json j;
    j["weights"] = vec_json(n.weights);
    if (n.leaf()) {
        j["coords"] = n.coords;
    } else {
        Json kids = Json::array();
        for (const auto& c : n.children) kids.push_back(node_json(c));
        j["children"] = std::move(kids);
    }
    return j;
}

HierarchicalNode node_from_json(const Json& j, const std::string& ptr) {
    HierarchicalNode n;
    n.weights = as_vector(require(j, "weights", ptr), child(ptr, "weights"));
    if (j.contains("children")) {
        const auto& kids = as_array(j["children"], child(ptr, "children"));
        for (std::size_t i = 0; i < kids.size(); ++i)
            n.children.push_back(node_from_json(kids[i], child(child(ptr, "children"), i)));
    } else {
        n.coords = as_int_vector(require(j, "coords", ptr), child(ptr, "coords"));
    }
    return n;
}

Json profile_base_json(const Loss& l) {
    Json j;
    j["loss"] = l.name;
    if (l.name == "huber") j["alpha"] = *l.param;
    if (l.name == "pinball") j["tau"] = *l.param;
    if (l.name == "eps_insensitive") j["epsilon"] = *l.param;
    return j;
}

Json pairwise_base_json(const PairwiseLoss& l) {
    Json j;
    j["pairwise"] = l.name;
    if (l.name == "huber_rho") j["alpha"] = *l.param;
    if (l.name == "pinball_rho") j["tau"] = *l.param;
    if (l.name == "eps_insensitive_rho") j["epsilon"] = *l.param;
    return j;
}

// builds a loss whose only parameter sits under key; construction errors point at that key
template <class F>
auto with_param(const Json& j, const std::string& ptr, const char* key, std::optional<double> fallback, F make) {
    double v = fallback && !j.contains(key) ? *fallback : get_double(j, key, ptr);
    return at_pointer(child(ptr, key), [&] { return make(v); });
}

Loss classical_from_json(const Json& j, const std::string& ptr) {
    const std::string name = as_string(require(j, "loss", ptr), child(ptr, "loss"));
    if (name == "hinge") return Loss::hinge();
    if (name == "c_logistic") return Loss::c_logistic();
    if (name == "r_logistic") return Loss::r_logistic();
    if (name == "huber") return with_param(j, ptr, "alpha", 1.0, Loss::huber);
    if (name == "pinball") return with_param(j, ptr, "tau", std::nullopt, Loss::pinball);
    if (name == "eps_insensitive") return with_param(j, ptr, "epsilon", std::nullopt, Loss::eps_insensitive);
    throw SchemaError(child(ptr, "loss"), "unknown loss '" + name + "'");
}

PairwiseLoss pairwise_from_json(const Json& j, const std::string& ptr) {
    const std::string name = as_string(require(j, "pairwise", ptr), child(ptr, "pairwise"));
    if (name == "r_logistic_rho") return PairwiseLoss::r_logistic();
    if (name == "c_logistic_rho") return PairwiseLoss::c_logistic();
    if (name == "huber_rho") return with_param(j, ptr, "alpha", 1.0, PairwiseLoss::huber);
    if (name == "pinball_rho") return with_param(j, ptr, "tau", std::nullopt, PairwiseLoss::pinball);
    if (name == "eps_insensitive_rho")
        return with_param(j, ptr, "epsilon", std::nullopt, PairwiseLoss::eps_insensitive);
    if (name == "absolute_rho") return PairwiseLoss::absolute();
    if (name == "hinge_rho") return PairwiseLoss::hinge();
    throw SchemaError(child(ptr, "pairwise"), "unknown pairwise loss '" + name + "'");
}

std::string mode_name(SolverMode m) {
    switch (m) {
    case SolverMode::fixed_point:
        return "fixed_point";
    case SolverMode::gradient:
        return "gradient";
    default:
        return "auto";
    }
}

Json constants_json(const BoundConstants& c) {
    Json j;
    j["kappa"] = c.kappa;
    j["r"] = opt_json(c.r);
    j["threshold"] = opt_json(c.threshold);
    j["s"] = opt_json(c.s);
    j["d_l"] = opt_json(c.d_l);
    j["tv_coef"] = opt_json(c.tv_coef);
    j["lambda_coef"] = opt_json(c.lambda_coef);
    j["kernel_coef"] = opt_json(c.kernel_coef);
    return j;
}

BoundConstants constants_from_json(const Json& j, const std::string& ptr) {
    BoundConstants c;
    c.kappa = get_double(j, "kappa", ptr);
    c.r = opt_double(j, "r", ptr);
    c.threshold = opt_double(j, "threshold", ptr);
    c.s = opt_double(j, "s", ptr);
    c.d_l = opt_double(j, "d_l", ptr);
    c.tv_coef = opt_double(j, "tv_coef", ptr);
    c.lambda_coef = opt_double(j, "lambda_coef", ptr);
    c.kernel_coef = opt_double(j, "kernel_coef", ptr);
    return c;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Json to_json(const GroundSpace& space) {
    Json pts = Json::array();
    for (int i = 0; i < space.size(); ++i) pts.push_back(vec_json(space.point(i)));
    return Json{{"points", std::move(pts)}};
}

GroundSpace space_from_json(const Json& j, const std::string& ptr) {
    if (j.contains("grid")) {
        const std::string gp = child(ptr, "grid");
        const Json& g = j["grid"];
        const Json& box = as_array(require(g, "box", gp), child(gp, "box"));
        if (box.empty()) throw SchemaError(child(gp, "box"), "box needs at least one axis");
        Vector lo(box.size()), hi(box.size());
        for (std::size_t a = 0; a < box.size(); ++a) {
            Vector side = as_vector(box[a], child(child(gp, "box"), a));
            if (side.size() != 2) throw SchemaError(child(child(gp, "box"), a), "expected [lo, hi]");
            lo(static_cast<Eigen::Index>(a)) = side(0);
            hi(static_cast<Eigen::Index>(a)) = side(1);
        }
        int res = as_int(require(g, "resolution", gp), child(gp, "resolution"));
        return at_pointer(gp, [&] { return GroundSpace::grid(lo, hi, res); });
    }
    const std::string pp = child(ptr, "points");
    Matrix rows = as_matrix(require(j, "points", ptr), pp);
    return at_pointer(pp, [&] { return GroundSpace(rows.transpose()); });
}

Json to_json(const DiscreteMeasure& p, bool with_points) {
    Json j;
    if (with_points) j["points"] = to_json(p.space())["points"];
    Json atoms = Json::array();
    for (const auto& a : p.atoms()) atoms.push_back(Json::array({a.x, a.y}));
    j["atoms"] = std::move(atoms);
    j["weights"] = vec_json(p.weights());
    return j;
}

DiscreteMeasure measure_from_json(const Json& j, const std::string& ptr) {
    GroundSpace space = space_from_json(j, ptr);
    return measure_from_json(j, space, ptr);
}

DiscreteMeasure measure_from_json(const Json& j, const GroundSpace& space, const std::string& ptr) {
    if (j.contains("points")) {
        Matrix rows = as_matrix(j["points"], child(ptr, "points"));
        if (rows.rows() != space.size() || rows.cols() != space.dim() || rows.transpose() != space.points())
            throw SchemaError(child(ptr, "points"), "points differ from the shared ground space");
    }
    const std::string ap = child(ptr, "atoms");
    const Json& atoms = as_array(require(j, "atoms", ptr), ap);
    std::vector<Atom> out;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string ip = child(ap, i);
        if (!atoms[i].is_array() || atoms[i].size() != 2) throw SchemaError(ip, "expected [x_index, y]");
        out.push_back({as_int(atoms[i][0], child(ip, 0)), as_double(atoms[i][1], child(ip, 1))});
    }
    if (!j.contains("weights") || j["weights"].is_null())
        return at_pointer(ptr, [&] { return DiscreteMeasure::uniform(space, out); });
    Vector w = as_vector(j["weights"], child(ptr, "weights"));
    return at_pointer(ptr, [&] { return DiscreteMeasure(space, out, w); });
}

Json to_json(const Kernel& k) {
    return std::visit(overloaded{
                          [](const GaussianRbf& g) { return Json{{"variant", "gaussian"}, {"gamma", g.gamma}}; },
                          [](const InhomogeneousGaussian& g) {
                              return Json{{"variant", "inhomogeneous"}, {"w", vec_json(g.w)}, {"gamma", g.gamma}};
                          },
                          [](const HierarchicalGaussian& h) {
                              return Json{{"variant", "hierarchical"},
                                          {"dim", h.params.dim},
                                          {"gammas", h.params.gammas},
                                          {"tree", node_json(h.params.root)}};
                          },
                          [](const CompactRbf& c) { return Json{{"variant", "compact"}, {"gamma", c.gamma}}; },
                          [](const LinearKernel&) { return Json{{"variant", "linear"}}; },
                          [](const GramBacked& g) {
                              Json rows = Json::array();
                              for (Eigen::Index r = 0; r < g.gram.rows(); ++r)
                                  rows.push_back(vec_json(g.gram.row(r).transpose()));
                              return Json{{"variant", "gram"}, {"matrix", std::move(rows)}};
                          },
                      },
                      k.variant());
}

HierarchicalParams hierarchical_from_json(const Json& j, const std::string& ptr) {
    const std::string gp = child(ptr, "gammas");
    std::vector<double> gammas = as_std_vector(require(j, "gammas", ptr), gp);
    if (j.contains("depth")) {
        int depth = as_int(j["depth"], child(ptr, "depth"));
        if (depth != static_cast<int>(gammas.size()))
            throw SchemaError(gp, "need one bandwidth per depth level");
    }
    if (j.contains("tree")) {
        HierarchicalParams p;
        p.dim = as_int(require(j, "dim", ptr), child(ptr, "dim"));
        p.gammas = gammas;
        p.root = node_from_json(j["tree"], child(ptr, "tree"));
        // round through the validating constructor path
        return at_pointer(ptr, [&] {
            Kernel k(HierarchicalGaussian{p});
            return std::get<HierarchicalGaussian>(k.variant()).params;
        });
    }
    const std::string sp = child(ptr, "index_sets");
    const Json& sets = as_array(require(j, "index_sets", ptr), sp);
    std::vector<std::vector<int>> index_sets;
    int max_index = -1;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        index_sets.push_back(as_int_vector(sets[i], child(sp, i)));
        for (int c : index_sets.back()) max_index = std::max(max_index, c);
    }
    int dim = j.contains("dim") ? as_int(j["dim"], child(ptr, "dim")) : max_index + 1;
    const std::string wp = child(ptr, "weights");
    const Json& w = require(j, "weights", ptr);
    std::vector<std::vector<Vector>> layers;
    if (w.contains("layers")) {
        const std::string lp = child(wp, "layers");
        const Json& ls = as_array(w["layers"], lp);
        for (std::size_t l = 0; l < ls.size(); ++l) {
            const Json& layer = as_array(ls[l], child(lp, l));
            std::vector<Vector> entries;
            for (std::size_t i = 0; i < layer.size(); ++i) {
                const Json& e = layer[i];
                const std::string ep = child(child(lp, l), i);
                entries.push_back(e.is_number() ? Vector::Constant(1, as_double(e, ep)) : as_vector(e, ep));
            }
            layers.push_back(std::move(entries));
        }
    }
    Vector top = as_vector(require(w, "top", wp), child(wp, "top"));
    return at_pointer(ptr, [&] { return HierarchicalParams::layered(dim, index_sets, layers, top, gammas); });
}

Kernel kernel_from_json(const Json& j, const GroundSpace* space, const std::string& ptr) {
    const std::string variant = as_string(require(j, "variant", ptr), child(ptr, "variant"));
    if (variant == "gaussian")
        return at_pointer(ptr, [&] { return Kernel(GaussianRbf{get_double(j, "gamma", ptr)}); });
    if (variant == "inhomogeneous") {
        Vector w = as_vector(require(j, "w", ptr), child(ptr, "w"));
        return at_pointer(ptr, [&] { return Kernel(InhomogeneousGaussian{w, get_double(j, "gamma", ptr)}); });
    }
    if (variant == "hierarchical") {
        HierarchicalParams p = hierarchical_from_json(j, ptr);
        return at_pointer(ptr, [&] { return Kernel(HierarchicalGaussian{p}); });
    }
    if (variant == "compact")
        return at_pointer(ptr, [&] { return Kernel(CompactRbf{get_double(j, "gamma", ptr)}); });
    if (variant == "linear") return Kernel(LinearKernel{});
    if (variant == "gram") {
        if (!space) throw SchemaError(child(ptr, "variant"), "gram kernels need a ground space");
        Matrix m = as_matrix(require(j, "matrix", ptr), child(ptr, "matrix"));
        return at_pointer(ptr, [&] { return Kernel(GramBacked{*space, m}); });
    }
    throw SchemaError(child(ptr, "variant"), "unknown kernel variant '" + variant + "'");
}

Json to_json(const AnyLoss& loss) {
    return std::visit(overloaded{
                          [](const Loss& l) {
                              Json base = profile_base_json(l);
                              if (!l.delta) return base;
                              return Json{{"smooth", {{"base", base}, {"delta", *l.delta}}}};
                          },
                          [](const PairwiseLoss& l) {
                              Json base = pairwise_base_json(l);
                              if (!l.delta) return base;
                              return Json{{"smooth", {{"base", base}, {"delta", *l.delta}}}};
                          },
                      },
                      loss);
}

AnyLoss loss_from_json(const Json& j, const std::string& ptr) {
    if (j.is_string()) return classical_from_json(Json{{"loss", j}}, ptr);
    if (!j.is_object()) throw SchemaError(ptr.empty() ? "/" : ptr, "expected a loss object");
    if (j.contains("smooth")) {
        const std::string sp = child(ptr, "smooth");
        const Json& s = j["smooth"];
        double delta = get_double(s, "delta", sp);
        AnyLoss base = loss_from_json(require(s, "base", sp), child(sp, "base"));
        return at_pointer(sp, [&]() -> AnyLoss {
            return std::visit([&](const auto& l) -> AnyLoss { return smooth(l, delta); }, base);
        });
    }
    if (j.contains("pairwise")) return pairwise_from_json(j, ptr);
    return classical_from_json(j, ptr);
}

Json to_json(const SolverOptions& o) {
    Json j;
    j["grad_tol"] = opt_json(o.grad_tol);
    j["max_iters"] = o.max_iters;
    j["damping"] = o.damping;
    j["delta_schedule"] = o.delta_schedule;
    j["mode"] = mode_name(o.mode);
    j["smooth_nonsmooth"] = o.smooth_nonsmooth;
    return j;
}

SolverOptions options_from_json(const Json& j, const std::string& ptr) {
    SolverOptions o;
    if (!j.is_object()) throw SchemaError(ptr.empty() ? "/" : ptr, "expected an object");
    o.grad_tol = opt_double(j, "grad_tol", ptr);
    if (o.grad_tol && !(*o.grad_tol > 0.0)) throw SchemaError(child(ptr, "grad_tol"), "must be positive");
    if (j.contains("max_iters")) {
        o.max_iters = as_int(j["max_iters"], child(ptr, "max_iters"));
        if (o.max_iters < 1) throw SchemaError(child(ptr, "max_iters"), "must be at least 1");
    }
    if (j.contains("damping")) {
        o.damping = as_double(j["damping"], child(ptr, "damping"));
        if (!(o.damping > 0.0 && o.damping <= 1.0)) throw SchemaError(child(ptr, "damping"), "must lie in (0, 1]");
    }
    if (j.contains("delta_schedule")) {
        o.delta_schedule = as_std_vector(j["delta_schedule"], child(ptr, "delta_schedule"));
        for (std::size_t i = 0; i < o.delta_schedule.size(); ++i)
            if (!(o.delta_schedule[i] > 0.0 && o.delta_schedule[i] <= 1.0) ||
                (i > 0 && !(o.delta_schedule[i] < o.delta_schedule[i - 1])))
                throw SchemaError(child(child(ptr, "delta_schedule"), i), "schedule must decrease within (0, 1]");
    }
    if (j.contains("mode")) {
        std::string m = as_string(j["mode"], child(ptr, "mode"));
        if (m == "auto")
            o.mode = SolverMode::automatic;
        else if (m == "fixed_point")
            o.mode = SolverMode::fixed_point;
        else if (m == "gradient")
            o.mode = SolverMode::gradient;
        else
            throw SchemaError(child(ptr, "mode"), "expected auto, fixed_point or gradient");
    }
    if (j.contains("smooth_nonsmooth"))
        o.smooth_nonsmooth = as_bool(j["smooth_nonsmooth"], child(ptr, "smooth_nonsmooth"));
    return o;
}

Json to_json(const SolveReport& r) {
    Json j;
    j["kernel"] = to_json(r.hypothesis.kernel);
    j["points"] = to_json(r.hypothesis.space)["points"];
    j["alpha"] = vec_json(r.hypothesis.alpha);
    j["h_norm"] = h_norm(r.hypothesis);
    j["sup_norm"] = sup_norm(r.hypothesis);
    j["objective"] = num_json(r.objective);
    j["iterations"] = r.iterations;
    j["grad_norm"] = num_json(r.grad_norm);
    j["fixed_point_residual"] = num_json(r.fixed_point_residual);
    j["delta_schedule_used"] = opt_json(r.delta_schedule_used);
    j["cauchy_increments"] = r.cauchy_increments;
    j["mode_used"] = r.mode_used;
    j["contraction_certified"] = r.contraction_certified;
    j["grad_tol"] = r.grad_tol;
    j["condition_number"] = num_json(r.condition_number);
    j["warnings"] = r.warnings;
    return j;
}

SolveReport solve_report_from_json(const Json& j, const std::string& ptr) {
    GroundSpace space = space_from_json(Json{{"points", require(j, "points", ptr)}}, ptr);
    Kernel k = kernel_from_json(require(j, "kernel", ptr), &space, child(ptr, "kernel"));
    Vector alpha = as_vector(require(j, "alpha", ptr), child(ptr, "alpha"));
    if (alpha.size() != space.size()) throw SchemaError(child(ptr, "alpha"), "one coefficient per point required");
    SolveReport r{Hypothesis{k, space, alpha}};
    r.objective = nullable_double(j, "objective", ptr);
    r.iterations = as_int(require(j, "iterations", ptr), child(ptr, "iterations"));
    r.grad_norm = nullable_double(j, "grad_norm", ptr);
    r.fixed_point_residual = nullable_double(j, "fixed_point_residual", ptr);
    if (j.contains("delta_schedule_used") && !j["delta_schedule_used"].is_null())
        r.delta_schedule_used = as_std_vector(j["delta_schedule_used"], child(ptr, "delta_schedule_used"));
    if (j.contains("cauchy_increments"))
        r.cauchy_increments = as_std_vector(j["cauchy_increments"], child(ptr, "cauchy_increments"));
    r.mode_used = as_string(require(j, "mode_used", ptr), child(ptr, "mode_used"));
    r.contraction_certified = as_bool(require(j, "contraction_certified", ptr), child(ptr, "contraction_certified"));
    r.grad_tol = get_double(j, "grad_tol", ptr);
    r.condition_number = nullable_double(j, "condition_number", ptr);
    if (j.contains("warnings")) {
        const Json& w = as_array(j["warnings"], child(ptr, "warnings"));
        for (std::size_t i = 0; i < w.size(); ++i) r.warnings.push_back(as_string(w[i], child(child(ptr, "warnings"), i)));
    }
    return r;
}

Json to_json(const BoundReport& r) {
    const bool computed = r.precondition_ok && !r.error;
    auto num = [&](double v) { return computed ? num_json(v) : Json(nullptr); };
    Json j;
    j["name"] = r.name;
    j["theorem"] = to_string(r.theorem);
    j["precondition_ok"] = r.precondition_ok;
    j["precondition_note"] = r.precondition_note;
    j["error"] = opt_json(r.error);
    j["passed"] = r.passed();
    j["lhs"] = num(r.lhs);
    j["signed_difference"] = num(r.signed_difference);
    j["rhs_terms"] = {{"tv_term", num(r.rhs_terms.tv_term)},
                      {"lambda_term", num(r.rhs_terms.lambda_term)},
                      {"kernel_term", num(r.rhs_terms.kernel_term)}};
    j["rhs_total"] = num(r.rhs_total);
    j["margin"] = num(r.margin);
    j["eps_solve"] = num(r.eps_solve);
    j["smoothing_allowance"] = num(r.smoothing_allowance);
    j["tv"] = r.tv;
    j["lambda_gap"] = r.lambda_gap;
    j["kernel_distance"] = num(r.kernel_distance);
    j["constants"] = constants_json(r.constants);
    Json solves = Json::array();
    for (const auto& s : r.solver_reports) solves.push_back(to_json(s));
    j["solver_reports"] = std::move(solves);
    return j;
}

BoundReport bound_report_from_json(const Json& j, const std::string& ptr) {
    BoundReport r;
    r.name = as_string(require(j, "name", ptr), child(ptr, "name"));
    const std::string tp = child(ptr, "theorem");
    std::string theorem = as_string(require(j, "theorem", ptr), tp);
    r.theorem = at_pointer(tp, [&] { return theorem_from_string(theorem); });
    r.precondition_ok = as_bool(require(j, "precondition_ok", ptr), child(ptr, "precondition_ok"));
    r.precondition_note = as_string(require(j, "precondition_note", ptr), child(ptr, "precondition_note"));
    if (j.contains("error") && !j["error"].is_null()) r.error = as_string(j["error"], child(ptr, "error"));
    r.lhs = nullable_double(j, "lhs", ptr);
    r.signed_difference = nullable_double(j, "signed_difference", ptr);
    const std::string rp = child(ptr, "rhs_terms");
    const Json& terms = require(j, "rhs_terms", ptr);
    r.rhs_terms.tv_term = nullable_double(terms, "tv_term", rp);
    r.rhs_terms.lambda_term = nullable_double(terms, "lambda_term", rp);
    r.rhs_terms.kernel_term = nullable_double(terms, "kernel_term", rp);
    r.rhs_total = nullable_double(j, "rhs_total", ptr);
    r.margin = nullable_double(j, "margin", ptr);
    r.eps_solve = nullable_double(j, "eps_solve", ptr);
    r.smoothing_allowance = nullable_double(j, "smoothing_allowance", ptr);
    r.tv = nullable_double(j, "tv", ptr);
    r.lambda_gap = nullable_double(j, "lambda_gap", ptr);
    r.kernel_distance = nullable_double(j, "kernel_distance", ptr);
    if (j.contains("constants") && !j["constants"].is_null())
        r.constants = constants_from_json(j["constants"], child(ptr, "constants"));
    if (j.contains("solver_reports")) {
        const std::string sp = child(ptr, "solver_reports");
        const Json& s = as_array(j["solver_reports"], sp);
        for (std::size_t i = 0; i < s.size(); ++i) r.solver_reports.push_back(solve_report_from_json(s[i], child(sp, i)));
    }
    return r;
}

Json to_json(const BatchSummary& s) {
    Json j;
    j["total"] = s.total;
    j["checked"] = s.checked;
    j["passed"] = s.passed;
    j["flagged"] = s.flagged;
    j["errors"] = s.errors;
    j["min_margin"] = opt_json(s.min_margin);
    j["mean_tv_share"] = s.mean_tv_share;
    j["mean_lambda_share"] = s.mean_lambda_share;
    j["mean_kernel_share"] = s.mean_kernel_share;
    return j;
}

BatchSummary summary_from_json(const Json& j, const std::string& ptr) {
    BatchSummary s;
    s.total = as_int(require(j, "total", ptr), child(ptr, "total"));
    s.checked = as_int(require(j, "checked", ptr), child(ptr, "checked"));
    s.passed = as_int(require(j, "passed", ptr), child(ptr, "passed"));
    s.flagged = as_int(require(j, "flagged", ptr), child(ptr, "flagged"));
    s.errors = as_int(require(j, "errors", ptr), child(ptr, "errors"));
    s.min_margin = opt_double(j, "min_margin", ptr);
    s.mean_tv_share = get_double(j, "mean_tv_share", ptr);
    s.mean_lambda_share = get_double(j, "mean_lambda_share", ptr);
    s.mean_kernel_share = get_double(j, "mean_kernel_share", ptr);
    return s;
}

std::string csv_header() {
    return "theorem,lhs,tv_term,lambda_term,kernel_term,rhs_total,margin,precondition_ok,name,eps_solve,passed";
}

std::string csv_row(const BoundReport& r) {
    const bool computed = r.precondition_ok && !r.error;
    auto num = [&](double v) { return computed ? format_double(v) : std::string(); };
    std::ostringstream os;
    os << to_string(r.theorem) << ',' << num(r.lhs) << ',' << num(r.rhs_terms.tv_term) << ','
       << num(r.rhs_terms.lambda_term) << ',' << num(r.rhs_terms.kernel_term) << ',' << num(r.rhs_total) << ','
       << num(r.margin) << ',' << (r.precondition_ok ? "true" : "false") << ',' << csv_field(r.name) << ','
       << num(r.eps_solve) << ',' << (r.passed() ? "true" : "false");
    return os.str();
}

} // namespace totstab
