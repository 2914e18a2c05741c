#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "totstab/solver.hpp"

using namespace totstab;

namespace {

GroundSpace line(int m, double step = 0.7) {
    Matrix pts(1, m);
    for (int i = 0; i < m; ++i) pts(0, i) = step * i;
    return GroundSpace(pts);
}

DiscreteMeasure random_measure(const GroundSpace& s, std::mt19937_64& rng, int n, bool binary) {
    std::uniform_int_distribution<int> xi(0, s.size() - 1);
    std::uniform_real_distribution<double> yr(-2, 2);
    std::vector<Atom> atoms;
    for (int i = 0; i < n; ++i) {
        double y = binary ? (yr(rng) > 0 ? 1.0 : -1.0) : yr(rng);
        atoms.push_back({xi(rng), y});
    }
    return DiscreteMeasure::empirical(s, atoms);
}

// F(alpha) summed directly from the loss definitions
double objective_oracle(const Vector& alpha, const Matrix& K, const DiscreteMeasure& p, double lambda,
                        const AnyLoss& loss) {
    Vector f = K * alpha;
    double r = 0.0;
    const auto& at = p.atoms();
    if (const auto* l = std::get_if<Loss>(&loss)) {
        for (int a = 0; a < p.size(); ++a)
            r += p.weights()(a) * (loss_value(*l, at[a].y, f(at[a].x)) - loss_value(*l, at[a].y, 0.0));
    } else {
        const auto& pl = std::get<PairwiseLoss>(loss);
        for (int a = 0; a < p.size(); ++a)
            for (int b = 0; b < p.size(); ++b) {
                double full = rho_value(pl, (at[a].y - f(at[a].x)) - (at[b].y - f(at[b].x)));
                double zero = rho_value(pl, at[a].y - at[b].y);
                r += p.weights()(a) * p.weights()(b) * (full - zero);
            }
    }
    return r + lambda * alpha.dot(K * alpha);
}

// coarse grid on the function values, then compass search down to 1e-12 steps
double brute_force_min(const Matrix& K, const DiscreteMeasure& p, double lambda, const AnyLoss& loss,
                       double radius) {
    const int m = static_cast<int>(K.rows());
    Eigen::LLT<Matrix> llt(K);
    auto F = [&](const Vector& f) { return objective_oracle(llt.solve(f), K, p, lambda, loss); };
    const int steps = m <= 2 ? 400 : (m == 3 ? 60 : 16);
    Vector best = Vector::Zero(m);
    double fbest = F(best);
    std::vector<int> idx(m, 0);
    while (true) {
        Vector f(m);
        for (int i = 0; i < m; ++i) f(i) = -radius + 2.0 * radius * idx[i] / steps;
        double v = F(f);
        if (v < fbest) fbest = v, best = f;
        int j = 0;
        while (j < m && ++idx[j] > steps) idx[j++] = 0;
        if (j == m) break;
    }
    for (double h = 2.0 * radius / steps; h > 1e-12; h *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (int i = 0; i < m; ++i)
                for (double sgn : {1.0, -1.0}) {
                    Vector f = best;
                    f(i) += sgn * h;
                    double v = F(f);
                    if (v < fbest) fbest = v, best = f, moved = true;
                }
        }
    }
    return fbest;
}

double lip_of(const AnyLoss& l) {
    if (const auto* c = std::get_if<Loss>(&l)) return loss_constants(*c).lip;
    return pairwise_constants(std::get<PairwiseLoss>(l)).sep_lip;
}

} // namespace

TEST(Solver, ZeroDerivativeGivesZero) {
    GroundSpace s = line(4);
    auto p = DiscreteMeasure::uniform(s, {{0, 0.0}, {1, 0.0}, {3, 0.0}});
    auto rep = solve_svm(p, 0.7, Kernel(GaussianRbf{1.0}), Loss::r_logistic());
    EXPECT_EQ(rep.hypothesis.alpha.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(rep.objective, 0.0);
}

TEST(Solver, LargeLambdaNormBound) {
    std::mt19937_64 rng(1);
    GroundSpace s = line(6);
    auto p = random_measure(s, rng, 10, true);
    Kernel k(GaussianRbf{1.0});
    auto rep = solve_svm(p, 1e6, k, Loss::c_logistic());
    EXPECT_LE(h_norm(rep.hypothesis), 1.0 * sup_norm(k, s) / 1e6 + rep.fixed_point_residual);
    EXPECT_TRUE(rep.contraction_certified);
}

TEST(Solver, ClassicalMatchesBruteForce) {
    std::mt19937_64 rng(2);
    for (int m : {2, 3, 5}) {
        GroundSpace s = line(m, 0.9);
        auto p = random_measure(s, rng, 8, true);
        Kernel k(GaussianRbf{0.8});
        const double lambda = 0.5;
        auto rep = solve_svm(p, lambda, k, Loss::c_logistic());
        double oracle = brute_force_min(*k.gram(s), p, lambda, Loss::c_logistic(), 2.0);
        EXPECT_NEAR(rep.objective, oracle, 1e-6) << m;
        EXPECT_LE(rep.objective, oracle + 1e-12) << m;
        EXPECT_NEAR(objective_oracle(rep.hypothesis.alpha, *k.gram(s), p, lambda, Loss::c_logistic()), rep.objective,
                    1e-12);
    }
}

TEST(Solver, PairwiseMatchesBruteForce) {
    std::mt19937_64 rng(3);
    GroundSpace s = line(4, 0.9);
    auto p = random_measure(s, rng, 4, false);
    Kernel k(GaussianRbf{0.8});
    const double lambda = 0.3;
    AnyLoss l = PairwiseLoss::r_logistic();
    auto rep = solve(p, lambda, k, l);
    Matrix K = *k.gram(s);
    double oracle = brute_force_min(K, p, lambda, l, 2.0);
    EXPECT_NEAR(rep.objective, oracle, 1e-6);
    EXPECT_NEAR(objective_oracle(rep.hypothesis.alpha, K, p, lambda, l), rep.objective, 1e-12);
}

TEST(Solver, PairwiseSingleAtomIsZero) {
    GroundSpace s = line(3);
    auto p = DiscreteMeasure::uniform(s, {{1, 2.5}});
    auto rep = solve_rpl(p, 0.01, Kernel(GaussianRbf{1.0}), PairwiseLoss::r_logistic());
    EXPECT_EQ(rep.hypothesis.alpha.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solver, PairwiseContractionRegime) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        GroundSpace s = line(6, 0.5);
        auto p = random_measure(s, rng, 10, false);
        Kernel k(GaussianRbf{0.7});
        auto pl = PairwiseLoss::r_logistic();
        double thr = sup_norm(k, s) * sup_norm(k, s) * *pairwise_constants(pl).d_l;
        auto rep = solve_rpl(p, 1.5 * thr, k, pl);
        EXPECT_EQ(rep.mode_used, "fixed_point");
        EXPECT_TRUE(rep.contraction_certified);
        EXPECT_LT(rep.fixed_point_residual, rep.grad_tol);
        EXPECT_LE(fixed_point_residual(rep.hypothesis, p, 1.5 * thr, pl), 10 * rep.grad_tol);
    }
}

TEST(Solver, ResidualAtSolutionAndAwayFromIt) {
    std::mt19937_64 rng(5);
    GroundSpace s = line(7, 0.6);
    auto p = random_measure(s, rng, 15, false);
    Kernel k(GaussianRbf{0.9});
    for (const auto& l : {Loss::huber(1.0), Loss::r_logistic()}) {
        for (double lambda : {1e-3, 0.05, 2.0}) {
            auto rep = solve_svm(p, lambda, k, l);
            EXPECT_LE(fixed_point_residual(rep.hypothesis, p, lambda, l), 10 * rep.grad_tol) << l.name << lambda;
            EXPECT_LE(rep.grad_norm, rep.grad_tol);
        }
        Hypothesis zero{k, s, Vector::Zero(s.size())};
        EXPECT_GT(fixed_point_residual(zero, p, 0.5, l), 0.0);
    }
    EXPECT_THROW(fixed_point_residual(Hypothesis{k, s, Vector::Zero(7)}, p, 0.5, Loss::hinge()), CapabilityError);
}

TEST(Solver, ResidualIndependentOfAtomOrder) {
    std::mt19937_64 rng(6);
    GroundSpace s = line(5, 0.6);
    auto p = random_measure(s, rng, 12, false);
    Kernel k(GaussianRbf{0.9});
    auto rep = solve_svm(p, 0.1, k, Loss::huber(0.5));
    std::vector<int> order(p.size());
    for (int i = 0; i < p.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Atom> atoms;
    Vector w(p.size());
    for (int i = 0; i < p.size(); ++i) atoms.push_back(p.atoms()[order[i]]), w(i) = p.weights()(order[i]);
    DiscreteMeasure q(s, atoms, w);
    EXPECT_NEAR(fixed_point_residual(rep.hypothesis, p, 0.1, Loss::huber(0.5)),
                fixed_point_residual(rep.hypothesis, q, 0.1, Loss::huber(0.5)), 1e-14);
}

TEST(Solver, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    GroundSpace s = line(5, 0.6);
    Kernel k(GaussianRbf{0.9});
    std::vector<AnyLoss> losses{Loss::c_logistic(),           Loss::huber(1.0),
                                Loss::r_logistic(),           smooth(Loss::hinge(), 0.1),
                                PairwiseLoss::r_logistic(),   PairwiseLoss::c_logistic(),
                                PairwiseLoss::huber(1.0),     smooth(PairwiseLoss::absolute(), 0.1)};
    for (const auto& l : losses) {
        bool margin = std::holds_alternative<Loss>(l) && std::get<Loss>(l).kind == LossKind::margin;
        auto p = random_measure(s, rng, 9, margin);
        for (int trial = 0; trial < 5; ++trial) {
            Vector alpha(5);
            for (int i = 0; i < 5; ++i) alpha(i) = n01(rng);
            Hypothesis f{k, s, alpha};
            Vector g = objective_gradient(f, p, 0.3, l);
            for (int i = 0; i < 5; ++i) {
                double h = 1e-6;
                Hypothesis fp = f, fm = f;
                fp.alpha(i) += h;
                fm.alpha(i) -= h;
                double fd = (objective(fp, p, 0.3, l) - objective(fm, p, 0.3, l)) / (2 * h);
                EXPECT_NEAR(g(i), fd, 1e-5 * std::max(1.0, std::abs(fd)));
            }
            EXPECT_NEAR(objective(f, p, 0.3, l), objective_oracle(alpha, *k.gram(s), p, 0.3, l), 1e-12);
        }
    }
}

TEST(Solver, Deterministic) {
    std::mt19937_64 rng(8);
    GroundSpace s = line(6, 0.6);
    auto p = random_measure(s, rng, 12, false);
    Kernel k(GaussianRbf{0.9});
    auto a = solve_svm(p, 0.02, k, Loss::pinball(0.3));
    auto b = solve_svm(p, 0.02, Kernel(GaussianRbf{0.9}), Loss::pinball(0.3));
    EXPECT_EQ(a.hypothesis.alpha, b.hypothesis.alpha);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solver, NormBoundOnRandomSolves) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lam(0.01, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        GroundSpace s = line(6, 0.5);
        auto p = random_measure(s, rng, 10, trial % 2 == 0);
        Kernel k(GaussianRbf{0.8});
        AnyLoss l = trial % 2 == 0 ? Loss::c_logistic() : Loss::huber(1.5);
        double lambda = lam(rng);
        auto rep = solve(p, lambda, k, l);
        EXPECT_LE(h_norm(rep.hypothesis), lip_of(l) * sup_norm(k, s) / lambda + rep.fixed_point_residual);
        EXPECT_LE(sup_norm(rep.hypothesis), sup_norm(k, s) * h_norm(rep.hypothesis) * (1 + 1e-9) + 1e-12);
        EXPECT_TRUE(rep.warnings.empty());
    }
}

TEST(Solver, TwoStartsAgree) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n01;
    GroundSpace s = line(6, 0.5);
    Kernel k(GaussianRbf{0.8});
    for (const AnyLoss& l : {AnyLoss(Loss::huber(1.0)), AnyLoss(PairwiseLoss::r_logistic())}) {
        auto p = random_measure(s, rng, 10, false);
        SolverOptions o;
        Vector init(6);
        for (int i = 0; i < 6; ++i) init(i) = 5.0 * n01(rng);
        o.initial_alpha = init;
        auto a = solve(p, 0.05, k, l);
        auto b = solve(p, 0.05, k, l, o);
        Hypothesis d{k, s, a.hypothesis.alpha - b.hypothesis.alpha};
        EXPECT_LE(h_norm(d), 100 * a.grad_tol);
    }
}

TEST(Solver, ModesAgree) {
    std::mt19937_64 rng(11);
    GroundSpace s = line(5, 0.5);
    auto p = random_measure(s, rng, 10, false);
    Kernel k(GaussianRbf{0.8});
    SolverOptions fp, gd;
    fp.mode = SolverMode::fixed_point;
    gd.mode = SolverMode::gradient;
    auto a = solve_svm(p, 1.0, k, Loss::huber(1.0), fp);
    auto b = solve_svm(p, 1.0, k, Loss::huber(1.0), gd);
    EXPECT_EQ(a.mode_used, "fixed_point");
    EXPECT_NE(b.mode_used, "fixed_point");
    EXPECT_LE((a.hypothesis.alpha - b.hypothesis.alpha).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solver, NonsmoothSchedule) {
    std::mt19937_64 rng(12);
    GroundSpace s = line(6, 0.5);
    auto p = random_measure(s, rng, 12, true);
    Kernel k(GaussianRbf{0.8});
    auto rep = solve_svm(p, 0.1, k, Loss::hinge());
    ASSERT_TRUE(rep.delta_schedule_used);
    EXPECT_EQ(*rep.delta_schedule_used, SolverOptions{}.delta_schedule);
    ASSERT_EQ(rep.cauchy_increments.size(), 4u);
    // the last increments shrink with delta
    EXPECT_LE(rep.cauchy_increments[3], rep.cauchy_increments[0] + 1e-9);

    SolverOptions off;
    off.smooth_nonsmooth = false;
    EXPECT_THROW(solve_svm(p, 0.1, k, Loss::hinge(), off), CapabilityError);
}

TEST(Solver, Errors) {
    GroundSpace s = line(3);
    auto p = DiscreteMeasure::uniform(s, {{0, 1.0}, {2, -1.0}});
    Kernel k(GaussianRbf{1.0});
    EXPECT_THROW(solve_svm(p, 0.0, k, Loss::c_logistic()), ArgumentError);
    EXPECT_THROW(solve_svm(p, -1.0, k, Loss::c_logistic()), ArgumentError);
    SolverOptions bad;
    bad.delta_schedule = {1e-3, 1e-2};
    EXPECT_THROW(solve_svm(p, 0.1, k, Loss::hinge(), bad), ArgumentError);

    SolverOptions tight;
    tight.max_iters = 1;
    tight.grad_tol = 1e-300;
    tight.mode = SolverMode::gradient;
    try {
        solve_svm(p, 0.01, k, Loss::c_logistic(), tight);
        FAIL() << "expected non-convergence";
    } catch (const ConvergenceError& e) {
        EXPECT_FALSE(e.grad_norm_trace.empty());
    }

    GroundSpace other = line(3);
    Hypothesis f{k, other, Vector::Zero(3)};
    EXPECT_THROW(risk(p, Loss::c_logistic(), f), DomainMismatchError);
}

TEST(Risk, Examples) {
    GroundSpace s = line(3);
    Kernel k(GaussianRbf{1.0});
    auto p = DiscreteMeasure(s, {{0, 1.0}, {2, -0.5}}, (Vector(2) << 0.25, 0.75).finished());
    Hypothesis zero{k, s, Vector::Zero(3)};
    EXPECT_EQ(risk(p, Loss::huber(1.0), zero), 0.0);
    EXPECT_EQ(pairwise_risk(p, PairwiseLoss::r_logistic(), zero), 0.0);

    Hypothesis f{k, s, (Vector(3) << 0.3, -0.2, 0.5).finished()};
    Vector v = values(f);
    auto hub = [](double r) { return std::abs(r) <= 1 ? 0.5 * r * r : std::abs(r) - 0.5; };
    double expect = 0.25 * (hub(1.0 - v(0)) - hub(1.0)) + 0.75 * (hub(-0.5 - v(2)) - hub(-0.5));
    EXPECT_NEAR(risk(p, Loss::huber(1.0), f), expect, 1e-15);

    auto single = DiscreteMeasure::uniform(s, {{1, 3.0}});
    EXPECT_EQ(pairwise_risk(single, PairwiseLoss::r_logistic(), f), 0.0);

    auto rl = [](double r) { return std::abs(r) + 2 * std::log1p(std::exp(-std::abs(r))) - std::log(4.0); };
    double xi = (1.0 - v(0)) - (-0.5 - v(2)), xi0 = 1.5;
    double pexpect = 0.25 * 0.75 * (rl(xi) - rl(xi0)) + 0.75 * 0.25 * (rl(-xi) - rl(-xi0));
    EXPECT_NEAR(pairwise_risk(p, PairwiseLoss::r_logistic(), f), pexpect, 1e-15);
}
