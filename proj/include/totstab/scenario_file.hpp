#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "totstab/io.hpp"

namespace totstab {

struct KernelPair {
    std::string name;
    std::string first;
    std::string second;
    std::optional<double> a; // Gaussian lower bandwidth; defaults to the smaller one
};

struct TrainSpec {
    std::string measure;
    double lambda = 1.0;
    std::string kernel;
    AnyLoss loss;
};

// Parsed scenario file with every name resolved.
struct ScenarioFile {
    explicit ScenarioFile(GroundSpace s) : space(std::move(s)) {}

    int version = 1;
    Json space_spec;
    GroundSpace space;
    std::map<std::string, DiscreteMeasure> measures;
    std::map<std::string, Kernel> kernels;
    std::optional<AnyLoss> loss;
    SolverOptions options;
    std::vector<Scenario> scenarios; // explicit ones first, then generated ones
    std::vector<KernelPair> kernel_pairs;
    std::optional<TrainSpec> train;
    std::optional<std::string> output;
};

// seed drives the "random" section only; grid_resolution overrides a grid space spec
ScenarioFile load_scenario_file(const Json& j, std::uint64_t seed = 0, std::optional<int> grid_resolution = {});
ScenarioFile load_scenario_file_path(const std::string& path, std::uint64_t seed = 0,
                                     std::optional<int> grid_resolution = {});

struct KernelDistance {
    std::string name;
    std::string family; // gaussian, hierarchical, or other
    double measured = 0.0;
    std::optional<double> bound;
    std::optional<double> ratio;
    bool within_bound() const;
};

KernelDistance kernel_distance(const ScenarioFile& f, const KernelPair& pair);

} // namespace totstab
