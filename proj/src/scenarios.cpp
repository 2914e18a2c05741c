#include <cmath>
#include <random>
#include <set>

#include "totstab/bounds.hpp"

namespace totstab {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

bool h1_theorem(Theorem t) {
    return t == Theorem::thm3_h1_part1 || t == Theorem::thm3_h1_part2 || t == Theorem::thm5_pair_h1_part1 ||
           t == Theorem::thm5_pair_h1_part2;
}

AnyLoss pick_loss(Theorem t, Rng& rng, const std::optional<std::string>& name) {
    auto classical = [&](const std::string& n) -> Loss {
        if (n == "c_logistic") return Loss::c_logistic();
        if (n == "huber") return Loss::huber(1.0);
        if (n == "r_logistic") return Loss::r_logistic();
        if (n == "hinge") return Loss::hinge();
        if (n == "pinball") return Loss::pinball(uniform(rng, 0.1, 0.9));
        if (n == "eps_insensitive") return Loss::eps_insensitive(uniform(rng, 0.1, 0.5));
        throw ArgumentError("unknown loss '" + n + "'");
    };
    auto pairwise = [&](const std::string& n) -> PairwiseLoss {
        if (n == "r_logistic_rho") return PairwiseLoss::r_logistic();
        if (n == "c_logistic_rho") return PairwiseLoss::c_logistic();
        if (n == "huber_rho") return PairwiseLoss::huber(1.0);
        if (n == "pinball_rho") return PairwiseLoss::pinball(uniform(rng, 0.1, 0.9));
        if (n == "absolute_rho") return PairwiseLoss::absolute();
        if (n == "eps_insensitive_rho") return PairwiseLoss::eps_insensitive(uniform(rng, 0.1, 0.5));
        throw ArgumentError("unknown pairwise loss '" + n + "'");
    };
    std::vector<std::string> pool;
    switch (t) {
    case Theorem::thm3_h1_part2: pool = {"hinge", "pinball"}; break;
    case Theorem::thm4_pair_sup:
    case Theorem::cor2_pair_func:
    case Theorem::cor2_pair_risk:
    case Theorem::thm5_pair_h1_part1: pool = {"r_logistic_rho", "c_logistic_rho"}; break;
    case Theorem::thm5_pair_h1_part2: pool = {"huber_rho", "pinball_rho", "absolute_rho", "eps_insensitive_rho"}; break;
    default: pool = {"c_logistic", "huber", "r_logistic"}; break;
    }
    std::string n = name ? *name : pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)];
    if (is_pairwise(t)) return pairwise(n);
    return classical(n);
}

double threshold(Theorem t, const AnyLoss& loss) {
    switch (t) {
    case Theorem::thm2_sup:
    case Theorem::cor1_func:
    case Theorem::cor1_risk: return 0.5 * *loss_constants(std::get<Loss>(loss)).lip_deriv;
    case Theorem::thm4_pair_sup:
    case Theorem::cor2_pair_func:
    case Theorem::cor2_pair_risk: return *pairwise_constants(std::get<PairwiseLoss>(loss)).d_l;
    default: return 0.0;
    }
}

HierarchicalParams random_hierarchical(Rng& rng, double g1, double g2, double scale) {
    Vector top(2);
    top << uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0);
    top /= std::max(1.0, top.norm()) * 1.0001;
    top *= scale;
    std::vector<Vector> leaves{Vector::Constant(1, uniform(rng, 0.5, 1.0)), Vector::Constant(1, uniform(rng, 0.5, 1.0))};
    double fro = std::hypot(leaves[0](0), leaves[1](0));
    if (fro > 1.0)
        for (auto& l : leaves) l /= fro * 1.0001;
    return HierarchicalParams::layered(2, {{0}, {1}}, {leaves}, top, {g1, g2});
}

Scenario one(Theorem t, Rng& rng, const RandomScenarioConfig& cfg, int index) {
    const int d = 2;
    const int m = uniform_int(rng, 4, std::max(4, cfg.max_points));
    Matrix pts(d, m);
    for (int j = 0; j < m; ++j)
        for (int r = 0; r < d; ++r) pts(r, j) = uniform(rng, 0.0, 3.0);
    GroundSpace space(pts);

    AnyLoss loss = pick_loss(t, rng, cfg.loss_name);
    const bool margin = std::holds_alternative<Loss>(loss) && std::get<Loss>(loss).kind == LossKind::margin;

    auto draw_y = [&](int x, bool outlier) {
        if (margin) return uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        if (outlier) return uniform(rng, -4.0, 4.0);
        return std::sin(2.0 * pts(0, x)) + 0.5 * pts(1, x) - 0.75 + uniform(rng, -0.3, 0.3);
    };
    const int n = uniform_int(rng, 2, std::max(2, cfg.max_atoms));
    std::vector<Atom> atoms;
    std::set<std::pair<int, double>> seen;
    for (int tries = 0; static_cast<int>(atoms.size()) < n && tries < 50 * n; ++tries) {
        int x = uniform_int(rng, 0, m - 1);
        double y = draw_y(x, false);
        if (seen.insert({x, y}).second) atoms.push_back({x, y});
    }
    DiscreteMeasure p1 = DiscreteMeasure::uniform(space, atoms);
    DiscreteMeasure p2 = p1;
    if (cfg.perturb_measure && t != Theorem::thm1_lambda) {
        int nn = p1.size();
        int ell = uniform_int(rng, 1, std::max(1, nn / 4));
        std::vector<Atom> repl;
        for (int k = 0; k < ell; ++k) {
            int x = uniform_int(rng, 0, m - 1);
            repl.push_back({x, draw_y(x, true)});
        }
        p2 = contaminate(p1, ell, repl);
    }

    double g1 = uniform(rng, 0.6, 1.4);
    double g2 = cfg.perturb_kernel && t != Theorem::thm1_lambda ? g1 * (1.0 + uniform(rng, -0.25, 0.25)) : g1;
    Kernel k1 = GaussianRbf{g1};
    Kernel k2 = g2 == g1 ? k1 : Kernel(GaussianRbf{g2});
    if (cfg.hierarchical) {
        double ga = uniform(rng, 0.8, 1.5), gb = uniform(rng, 0.8, 1.5);
        Rng copy = rng;
        k1 = HierarchicalGaussian{random_hierarchical(rng, ga, gb, 1.0)};
        k2 = cfg.perturb_kernel && t != Theorem::thm1_lambda
                 ? Kernel(HierarchicalGaussian{random_hierarchical(copy, ga, gb, 0.9)})
                 : k1;
    }

    double lam1, lam2;
    if (h1_theorem(t)) {
        double lo = cfg.small_lambda ? 1e-3 : cfg.lambda_min;
        lam1 = cfg.small_lambda && index % 3 == 0 ? 1e-3 : log_uniform(rng, lo, cfg.lambda_max);
        lam2 = cfg.perturb_lambda ? lam1 * std::exp(uniform(rng, 0.0, 0.5)) : lam1;
    } else if (t == Theorem::thm1_lambda) {
        lam1 = log_uniform(rng, cfg.lambda_min, cfg.lambda_max);
        lam2 = log_uniform(rng, cfg.lambda_min, cfg.lambda_max);
    } else {
        double lo = std::max(1.1 * threshold(t, loss), cfg.lambda_min);
        double hi = std::max(lo, cfg.lambda_max);
        lam1 = log_uniform(rng, lo, hi);
        lam2 = cfg.perturb_lambda ? std::max(lo, lam1 * std::exp(uniform(rng, -0.3, 0.3))) : lam1;
    }

    Scenario sc{to_string(t) + "#" + std::to_string(index), {p1, lam1, k1}, {p2, lam2, k2}, loss, t, std::nullopt};
    return sc;
}

} // namespace

std::vector<Scenario> random_scenarios(Theorem t, int count, std::uint64_t seed, const RandomScenarioConfig& cfg) {
    Rng rng(seed);
    std::vector<Scenario> out;
    for (int i = 0; i < count; ++i) {
        for (int attempt = 0;; ++attempt) {
            Scenario sc = one(t, rng, cfg, i);
            if (h1_theorem(t)) {
                const GroundSpace& sp = sc.first.measure.space();
                if (!strictly_pd(*sc.first.kernel.gram(sp)) ||
                    !rkhs_inclusion_check(sc.first.kernel, sc.second.kernel, sp)) {
                    if (attempt > 100) throw ArgumentError("could not draw a well-conditioned space");
                    continue;
                }
            }
            out.push_back(std::move(sc));
            break;
        }
    }
    return out;
}

} // namespace totstab
