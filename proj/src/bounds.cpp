#include "totstab/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace totstab {

namespace {

struct TheoremName {
    Theorem t;
    const char* name;
};

const TheoremName kNames[] = {
    {Theorem::thm1_lambda, "thm1_lambda"},
    {Theorem::thm2_sup, "thm2_sup"},
    {Theorem::cor1_func, "cor1_func"},
    {Theorem::cor1_risk, "cor1_risk"},
    {Theorem::thm3_h1_part1, "thm3_h1_part1"},
    {Theorem::thm3_h1_part2, "thm3_h1_part2"},
    {Theorem::thm4_pair_sup, "thm4_pair_sup"},
    {Theorem::cor2_pair_func, "cor2_pair_func"},
    {Theorem::cor2_pair_risk, "cor2_pair_risk"},
    {Theorem::thm5_pair_h1_part1, "thm5_pair_h1_part1"},
    {Theorem::thm5_pair_h1_part2, "thm5_pair_h1_part2"},
};

bool is_h1(Theorem t) {
    return t == Theorem::thm3_h1_part1 || t == Theorem::thm3_h1_part2 || t == Theorem::thm5_pair_h1_part1 ||
           t == Theorem::thm5_pair_h1_part2;
}

bool needs_s(Theorem t) {
    return t == Theorem::cor1_func || t == Theorem::cor1_risk || t == Theorem::cor2_pair_func ||
           t == Theorem::cor2_pair_risk;
}

double min_lambda(const Scenario& sc) { return std::min(sc.first.lambda, sc.second.lambda); }

double loss_lip(const AnyLoss& loss) {
    return std::visit(
        [](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Loss>) return loss_constants(l).lip;
            else return pairwise_constants(l).sep_lip;
        },
        loss);
}

std::optional<double> final_delta(const AnyLoss& loss, const SolverOptions& opts) {
    bool diff = std::visit([](const auto& l) { return is_differentiable(l); }, loss);
    if (diff || opts.delta_schedule.empty()) return std::nullopt;
    return opts.delta_schedule.back();
}

void check_structure(const Scenario& sc) {
    require_same_space(sc.first.measure.space(), sc.second.measure.space(), "scenario measures");
    const int d = sc.first.measure.space().dim();
    for (const Kernel* k : {&sc.first.kernel, &sc.second.kernel})
        if (k->dim() >= 0 && k->dim() != d) throw ArgumentError("kernel dimension does not match the ground space");
    if (is_pairwise(sc.theorem) != std::holds_alternative<PairwiseLoss>(sc.loss))
        throw ArgumentError("theorem " + to_string(sc.theorem) + " needs a " +
                            (is_pairwise(sc.theorem) ? "pairwise" : "classical") + " loss");
    if (!(sc.first.lambda > 0.0) || !(sc.second.lambda > 0.0)) throw ArgumentError("lambdas must be positive");
}

double h1_norm_of(const Eigen::LLT<Matrix>& llt, const Vector& v) { return llt.matrixL().solve(v).norm(); }

} // namespace

std::string to_string(Theorem t) {
    for (const auto& n : kNames)
        if (n.t == t) return n.name;
    return "unknown";
}

Theorem theorem_from_string(const std::string& s) {
    for (const auto& n : kNames)
        if (s == n.name) return n.t;
    throw ArgumentError("unknown theorem '" + s + "'");
}

const std::vector<Theorem>& all_theorems() {
    static const std::vector<Theorem> all = [] {
        std::vector<Theorem> v;
        for (const auto& n : kNames) v.push_back(n.t);
        return v;
    }();
    return all;
}

bool is_pairwise(Theorem t) {
    return t == Theorem::thm4_pair_sup || t == Theorem::cor2_pair_func || t == Theorem::cor2_pair_risk ||
           t == Theorem::thm5_pair_h1_part1 || t == Theorem::thm5_pair_h1_part2;
}

BoundConstants constants_for(const Scenario& sc) {
    check_structure(sc);
    const GroundSpace& space = sc.first.measure.space();
    BoundConstants c;
    double k1 = sup_norm(sc.first.kernel, space);
    c.kappa = std::max(k1, sup_norm(sc.second.kernel, space));
    const double kappa = c.kappa;
    const double lmin = min_lambda(sc);

    auto pick_s = [&](double gap) {
        if (sc.s) return *sc.s;
        return gap / 2.0;
    };

    if (!is_pairwise(sc.theorem)) {
        const Loss& loss = std::get<Loss>(sc.loss);
        auto lc = loss_constants(loss);
        const double L = lc.lip;
        auto need_deriv = [&]() -> double {
            if (!lc.lip_deriv || !is_differentiable(loss))
                throw CapabilityError(to_string(sc.theorem) + " needs a loss with Lipschitz derivative; " + loss.name +
                                      " has none");
            return *lc.lip_deriv;
        };
        switch (sc.theorem) {
        case Theorem::thm1_lambda:
            need_deriv();
            c.r = lmin;
            c.lambda_coef = L * k1 / (lmin * lmin);
            break;
        case Theorem::thm2_sup:
        case Theorem::cor1_func:
        case Theorem::cor1_risk: {
            double Ld = need_deriv();
            double r = 0.5 * kappa * kappa * Ld;
            c.r = r;
            bool risk_bound = sc.theorem == Theorem::cor1_risk;
            c.tv_coef = risk_bound ? 4.0 * L * L / Ld : 2.0 * L / Ld;
            c.lambda_coef = risk_bound ? 4.0 * L * L / (kappa * kappa * Ld * Ld) : 4.0 * L / (kappa * kappa * Ld * Ld);
            if (sc.theorem == Theorem::thm2_sup) {
                if (lmin > r) c.kernel_coef = L / (2.0 * (lmin - r));
            } else {
                double s = pick_s(lmin - r);
                c.s = s;
                if (s > 0.0) c.kernel_coef = risk_bound ? L * L / (2.0 * s) : L / (2.0 * s);
            }
            break;
        }
        case Theorem::thm3_h1_part1:
            need_deriv();
            [[fallthrough]];
        case Theorem::thm3_h1_part2:
            c.tv_coef = kappa * L / lmin;
            c.lambda_coef = kappa * L / (lmin * lmin);
            c.kernel_coef = L / (2.0 * lmin);
            break;
        default:
            break;
        }
        return c;
    }

    const PairwiseLoss& pl = std::get<PairwiseLoss>(sc.loss);
    auto pc = pairwise_constants(pl);
    const double L = pc.sep_lip;
    auto need_certified = [&]() {
        if (!pc.certified || !pc.c_l1 || !pc.d_l)
            throw CapabilityError(to_string(sc.theorem) +
                                  " needs a differentiable pairwise loss with continuous bounded second derivatives; " +
                                  pl.name + " is not");
    };
    switch (sc.theorem) {
    case Theorem::thm4_pair_sup:
    case Theorem::cor2_pair_func:
    case Theorem::cor2_pair_risk: {
        need_certified();
        const double cl1 = *pc.c_l1;
        const double dl = *pc.d_l;
        const double thr = kappa * kappa * dl;
        c.d_l = dl;
        c.threshold = thr;
        if (sc.theorem == Theorem::cor2_pair_risk) {
            c.tv_coef = 4.0 * L * (L + 2.0 * cl1) / dl;
            c.lambda_coef = 2.0 * L * L / dl;
        } else {
            c.tv_coef = 4.0 * cl1 / dl;
            c.lambda_coef = L / dl;
        }
        if (sc.theorem == Theorem::thm4_pair_sup) {
            if (lmin > thr) c.kernel_coef = cl1 / (lmin - thr);
        } else {
            double s = pick_s(lmin - thr);
            c.s = s;
            if (s > 0.0) c.kernel_coef = sc.theorem == Theorem::cor2_pair_risk ? 2.0 * L * cl1 / s : cl1 / s;
        }
        break;
    }
    case Theorem::thm5_pair_h1_part1: {
        need_certified();
        const double cl1 = *pc.c_l1;
        c.d_l = pc.d_l;
        c.tv_coef = 4.0 * kappa * cl1 / lmin;
        c.lambda_coef = kappa * L / (lmin * lmin);
        c.kernel_coef = cl1 / lmin;
        break;
    }
    case Theorem::thm5_pair_h1_part2:
        c.tv_coef = 4.0 * kappa * L / lmin;
        c.lambda_coef = kappa * L / (lmin * lmin);
        c.kernel_coef = L / lmin;
        break;
    default:
        break;
    }
    return c;
}

bool BoundReport::passed() const {
    return precondition_ok && !error && margin >= -(eps_solve + smoothing_allowance);
}

namespace {

// Empty string when every precondition of the theorem holds.
std::string precondition_failure(const Scenario& sc, const BoundConstants& c) {
    const GroundSpace& space = sc.first.measure.space();
    const double lmin = min_lambda(sc);
    std::ostringstream why;
    if (const auto* l = std::get_if<Loss>(&sc.loss); l && l->kind == LossKind::margin) {
        for (const DiscreteMeasure* p : {&sc.first.measure, &sc.second.measure})
            for (const Atom& a : p->atoms())
                if (std::abs(a.y) > 1.0) return "margin-based loss constants assume |y| <= 1";
    }
    switch (sc.theorem) {
    case Theorem::thm1_lambda:
        if (tv_distance(sc.first.measure, sc.second.measure).distance != 0.0) return "measures differ";
        if (sup_distance(sc.first.kernel, sc.second.kernel, space) != 0.0) return "kernels differ";
        break;
    case Theorem::thm2_sup:
    case Theorem::cor1_func:
    case Theorem::cor1_risk:
        if (!(lmin > *c.r)) {
            why << "min lambda " << lmin << " <= r = " << *c.r;
            return why.str();
        }
        break;
    case Theorem::thm4_pair_sup:
    case Theorem::cor2_pair_func:
    case Theorem::cor2_pair_risk:
        if (!(lmin > *c.threshold)) {
            why << "min lambda " << lmin << " <= kappa^2 d_L = " << *c.threshold;
            return why.str();
        }
        break;
    default:
        break;
    }
    if (needs_s(sc.theorem)) {
        double gap = lmin - (c.r ? *c.r : *c.threshold);
        if (!(*c.s > 0.0 && *c.s < gap)) {
            why << "s = " << *c.s << " is not in (0, " << gap << ")";
            return why.str();
        }
    }
    if (is_h1(sc.theorem)) {
        auto K1 = sc.first.kernel.gram(space);
        double lmin_eig = min_eigenvalue(*K1);
        if (!(lmin_eig > 1e-10 * K1->trace())) {
            why << "Gram matrix of k1 is not strictly positive definite (min eigenvalue " << lmin_eig << ")";
            return why.str();
        }
        if (!rkhs_inclusion_check(sc.first.kernel, sc.second.kernel, space)) return "H2 is not contained in H1";
    }
    return {};
}

} // namespace

BoundReport verify(const Scenario& sc, const SolverOptions& opts) {
    BoundReport rep;
    rep.name = sc.name;
    rep.theorem = sc.theorem;
    rep.constants = constants_for(sc);
    const GroundSpace& space = sc.first.measure.space();

    rep.tv = tv_distance(sc.first.measure, sc.second.measure).distance;
    rep.lambda_gap = std::abs(sc.first.lambda - sc.second.lambda);
    rep.precondition_note = precondition_failure(sc, rep.constants);
    rep.precondition_ok = rep.precondition_note.empty();
    if (!rep.precondition_ok) return rep;

    rep.kernel_distance = is_h1(sc.theorem) ? h1_distance(sc.first.kernel, sc.second.kernel, space)
                                            : sup_distance(sc.first.kernel, sc.second.kernel, space);

    SolveReport s1 = solve(sc.first.measure, sc.first.lambda, sc.first.kernel, sc.loss, opts);
    SolveReport s2 = solve(sc.second.measure, sc.second.lambda, sc.second.kernel, sc.loss, opts);
    const Vector v1 = values(s1.hypothesis);
    const Vector v2 = values(s2.hypothesis);
    const double res1 = s1.fixed_point_residual;
    const double res2 = s2.fixed_point_residual;
    const double kap1 = sup_norm(sc.first.kernel, space);
    const double kap2 = sup_norm(sc.second.kernel, space);
    const double L = loss_lip(sc.loss);

    double h1_scale = 1.0;
    switch (sc.theorem) {
    case Theorem::thm1_lambda: {
        Vector d = s1.hypothesis.alpha - s2.hypothesis.alpha;
        rep.lhs = std::sqrt(std::max(0.0, d.dot(*sc.first.kernel.gram(space) * d)));
        rep.eps_solve = res1 + res2;
        break;
    }
    case Theorem::thm2_sup:
    case Theorem::cor1_func:
    case Theorem::thm4_pair_sup:
    case Theorem::cor2_pair_func:
        rep.lhs = (v1 - v2).cwiseAbs().maxCoeff();
        rep.eps_solve = kap1 * res1 + kap2 * res2;
        break;
    case Theorem::cor1_risk:
    case Theorem::cor2_pair_risk: {
        double r1 = any_risk(sc.first.measure, sc.loss, s1.hypothesis);
        double r2 = any_risk(sc.second.measure, sc.loss, s2.hypothesis);
        rep.signed_difference = r1 - r2;
        rep.lhs = std::abs(rep.signed_difference);
        double factor = sc.theorem == Theorem::cor2_pair_risk ? 2.0 * L : L;
        rep.eps_solve = factor * (kap1 * res1 + kap2 * res2);
        break;
    }
    default: {
        auto K1 = sc.first.kernel.gram(space);
        auto K2 = sc.second.kernel.gram(space);
        Eigen::LLT<Matrix> llt(*K1);
        rep.lhs = h1_norm_of(llt, v1 - v2);
        // largest ratio of the H1 norm to the H2 norm on H2
        Matrix Linv_K2 = llt.matrixL().solve(*K2);
        Matrix S = llt.matrixL().solve(Linv_K2.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
        h1_scale = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
        rep.eps_solve = res1 + h1_scale * res2;
        break;
    }
    }
    // floating-point evaluation of the two sides
    rep.eps_solve += 1e-13 * (1.0 + rep.lhs);

    if (auto delta = final_delta(sc.loss, opts))
        rep.smoothing_allowance = L * *delta / (2.0 * min_lambda(sc));

    const auto& c = rep.constants;
    rep.rhs_terms.tv_term = c.tv_coef ? *c.tv_coef * rep.tv : 0.0;
    rep.rhs_terms.lambda_term = c.lambda_coef ? *c.lambda_coef * rep.lambda_gap : 0.0;
    rep.rhs_terms.kernel_term = c.kernel_coef ? *c.kernel_coef * rep.kernel_distance : 0.0;
    rep.rhs_total = rep.rhs_terms.tv_term + rep.rhs_terms.lambda_term + rep.rhs_terms.kernel_term;
    rep.margin = rep.rhs_total - rep.lhs;
    rep.solver_reports = {std::move(s1), std::move(s2)};
    return rep;
}

BatchResult batch_verify(const std::vector<Scenario>& scenarios, const SolverOptions& opts, int jobs) {
    BatchResult out;
    out.reports.resize(scenarios.size());
    auto run_one = [&](std::size_t i) {
        try {
            out.reports[i] = verify(scenarios[i], opts);
        } catch (const std::exception& e) {
            BoundReport r;
            r.name = scenarios[i].name;
            r.theorem = scenarios[i].theorem;
            r.precondition_ok = false;
            r.error = e.what();
            out.reports[i] = std::move(r);
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1 || scenarios.size() < 2) {
        for (std::size_t i = 0; i < scenarios.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < scenarios.size(); i = next++) run_one(i);
            });
        for (auto& th : pool) th.join();
    }

    BatchSummary& s = out.summary;
    s.total = static_cast<int>(out.reports.size());
    int shares = 0;
    for (const auto& r : out.reports) {
        if (r.error) {
            ++s.errors;
            continue;
        }
        if (!r.precondition_ok) {
            ++s.flagged;
            continue;
        }
        ++s.checked;
        if (r.passed()) ++s.passed;
        s.min_margin = s.min_margin ? std::min(*s.min_margin, r.margin) : r.margin;
        if (r.rhs_total > 0.0) {
            s.mean_tv_share += r.rhs_terms.tv_term / r.rhs_total;
            s.mean_lambda_share += r.rhs_terms.lambda_term / r.rhs_total;
            s.mean_kernel_share += r.rhs_terms.kernel_term / r.rhs_total;
            ++shares;
        }
    }
    if (shares > 0) {
        s.mean_tv_share /= shares;
        s.mean_lambda_share /= shares;
        s.mean_kernel_share /= shares;
    }
    return out;
}

} // namespace totstab
