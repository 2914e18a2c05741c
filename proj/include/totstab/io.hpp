#pragma once

#include <string>

#include "json.hpp"

#include "totstab/bounds.hpp"

namespace totstab {

using Json = nlohmann::json;

// Input error carrying the JSON pointer of the offending value.
struct SchemaError : ArgumentError {
    SchemaError(const std::string& pointer, const std::string& what)
        : ArgumentError(pointer + ": " + what), pointer(pointer) {}
    std::string pointer;
};

// shortest round-trip decimal, locale independent
std::string format_double(double v);

Json to_json(const GroundSpace& space);
GroundSpace space_from_json(const Json& j, const std::string& ptr = "");

Json to_json(const DiscreteMeasure& p, bool with_points = true);
DiscreteMeasure measure_from_json(const Json& j, const std::string& ptr = "");
DiscreteMeasure measure_from_json(const Json& j, const GroundSpace& space, const std::string& ptr = "");

Json to_json(const Kernel& k);
Kernel kernel_from_json(const Json& j, const GroundSpace* space = nullptr, const std::string& ptr = "");
HierarchicalParams hierarchical_from_json(const Json& j, const std::string& ptr = "");

Json to_json(const AnyLoss& loss);
AnyLoss loss_from_json(const Json& j, const std::string& ptr = "");

Json to_json(const SolverOptions& o);
SolverOptions options_from_json(const Json& j, const std::string& ptr = "");

Json to_json(const SolveReport& r);
Json to_json(const BoundReport& r);
Json to_json(const BatchSummary& s);

// Inverse of the report serializers; the numeric fields come back bit-identical.
SolveReport solve_report_from_json(const Json& j, const std::string& ptr = "");
BoundReport bound_report_from_json(const Json& j, const std::string& ptr = "");
BatchSummary summary_from_json(const Json& j, const std::string& ptr = "");

std::string csv_header();
std::string csv_row(const BoundReport& r);

} // namespace totstab
