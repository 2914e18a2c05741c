#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "totstab/solver.hpp"

namespace totstab {

enum class Theorem {
    thm1_lambda,
    thm2_sup,
    cor1_func,
    cor1_risk,
    thm3_h1_part1,
    thm3_h1_part2,
    thm4_pair_sup,
    cor2_pair_func,
    cor2_pair_risk,
    thm5_pair_h1_part1,
    thm5_pair_h1_part2,
};

std::string to_string(Theorem t);
Theorem theorem_from_string(const std::string& s);
const std::vector<Theorem>& all_theorems();
bool is_pairwise(Theorem t);

struct Triple {
    DiscreteMeasure measure;
    double lambda = 1.0;
    Kernel kernel;
};

struct Scenario {
    std::string name;
    Triple first;
    Triple second;
    AnyLoss loss;
    Theorem theorem = Theorem::thm2_sup;
    std::optional<double> s; // Cor 1 / Cor 2 free parameter
};

// Unused entries stay empty.
struct BoundConstants {
    double kappa = 0.0;
    std::optional<double> r;         // classical threshold, or min lambda for the lambda bound
    std::optional<double> threshold; // kappa^2 d_L
    std::optional<double> s;
    std::optional<double> d_l;
    std::optional<double> tv_coef;
    std::optional<double> lambda_coef;
    std::optional<double> kernel_coef;
};

BoundConstants constants_for(const Scenario& sc);

struct RhsTerms {
    double tv_term = 0.0;
    double lambda_term = 0.0;
    double kernel_term = 0.0;
};

struct BoundReport {
    std::string name;
    Theorem theorem = Theorem::thm2_sup;
    bool precondition_ok = false;
    std::string precondition_note;
    std::optional<std::string> error;
    double lhs = 0.0;
    double signed_difference = 0.0; // risk theorems: R1 - R2
    RhsTerms rhs_terms;
    double rhs_total = 0.0;
    double margin = 0.0;
    double eps_solve = 0.0;
    double smoothing_allowance = 0.0;
    double tv = 0.0;
    double lambda_gap = 0.0;
    double kernel_distance = 0.0;
    BoundConstants constants;
    std::vector<SolveReport> solver_reports;

    bool passed() const;
};

BoundReport verify(const Scenario& sc, const SolverOptions& opts = {});

struct BatchSummary {
    int total = 0;
    int checked = 0; // precondition satisfied, no error
    int passed = 0;
    int flagged = 0; // precondition not satisfied
    int errors = 0;
    std::optional<double> min_margin;
    double mean_tv_share = 0.0;
    double mean_lambda_share = 0.0;
    double mean_kernel_share = 0.0;
};

struct BatchResult {
    std::vector<BoundReport> reports;
    BatchSummary summary;
};

BatchResult batch_verify(const std::vector<Scenario>& scenarios, const SolverOptions& opts = {}, int jobs = 1);

struct RandomScenarioConfig {
    int max_points = 12;
    int max_atoms = 20;
    double lambda_min = 0.2;
    double lambda_max = 5.0;
    bool small_lambda = false; // include lambda = 1e-3 for the H1 theorems
    bool perturb_measure = true;
    bool perturb_lambda = true;
    bool perturb_kernel = true;
    bool hierarchical = false;
    std::optional<std::string> loss_name;
};

std::vector<Scenario> random_scenarios(Theorem t, int count, std::uint64_t seed, const RandomScenarioConfig& cfg = {});

} // namespace totstab
