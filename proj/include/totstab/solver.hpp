#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "totstab/core.hpp"
#include "totstab/kernels.hpp"
#include "totstab/losses.hpp"
#include "totstab/space_measure.hpp"

namespace totstab {

// f = sum_i alpha_i k(., x_i) over all points of the space
struct Hypothesis {
    Kernel kernel;
    GroundSpace space;
    Vector alpha;
};

Vector values(const Hypothesis& f);
double h_norm(const Hypothesis& f);
double sup_norm(const Hypothesis& f);

enum class SolverMode { automatic, fixed_point, gradient };

struct SolverOptions {
    std::optional<double> grad_tol; // default 1e-10 * n * max(1, |L|_1)
    int max_iters = 50000;
    double damping = 0.5;
    std::vector<double> delta_schedule{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    SolverMode mode = SolverMode::automatic;
    bool smooth_nonsmooth = true;
    std::optional<Vector> initial_alpha; // over the full space
};

struct SolveReport {
    explicit SolveReport(Hypothesis h) : hypothesis(std::move(h)) {}

    Hypothesis hypothesis;
    double objective = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;
    double fixed_point_residual = 0.0;
    std::optional<std::vector<double>> delta_schedule_used;
    std::vector<double> cauchy_increments;
    std::string mode_used;
    bool contraction_certified = false;
    double grad_tol = 0.0;
    double condition_number = 1.0;
    std::vector<std::string> warnings;
};

using AnyLoss = std::variant<Loss, PairwiseLoss>;

SolveReport solve_svm(const DiscreteMeasure& p, double lambda, const Kernel& k, const Loss& loss,
                      const SolverOptions& opts = {});
SolveReport solve_rpl(const DiscreteMeasure& p, double lambda, const Kernel& k, const PairwiseLoss& ploss,
                      const SolverOptions& opts = {});
SolveReport solve(const DiscreteMeasure& p, double lambda, const Kernel& k, const AnyLoss& loss,
                  const SolverOptions& opts = {});

double risk(const DiscreteMeasure& p, const Loss& loss, const Hypothesis& f);
double pairwise_risk(const DiscreteMeasure& p, const PairwiseLoss& ploss, const Hypothesis& f);
double any_risk(const DiscreteMeasure& p, const AnyLoss& loss, const Hypothesis& f);

// ||f + (1/2 lambda) E[L' Phi]||_H
double fixed_point_residual(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const Loss& loss);
double fixed_point_residual(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const PairwiseLoss& ploss);

// Regularized objective over the full coefficient vector and its gradient.
double objective(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const AnyLoss& loss);
Vector objective_gradient(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const AnyLoss& loss);

double default_grad_tol(const DiscreteMeasure& p, const AnyLoss& loss);

} // namespace totstab
