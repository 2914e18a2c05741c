// Command-line driver: verify, kernel-dist, train.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "totstab/scenario_file.hpp"

using namespace totstab;

namespace {

enum class LogLevel { off, info, debug };

LogLevel log_level() {
    const char* env = std::getenv("TOTAL_STAB_LOG");
    if (!env) return LogLevel::off;
    std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::off;
}

void log(LogLevel at, const std::string& msg) {
    static const LogLevel level = log_level();
    if (level == LogLevel::off || at > level) return;
    std::cerr << (at == LogLevel::debug ? "[debug] " : "[info] ") << msg << "\n";
}

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kViolation = 2;
constexpr int kSolveError = 3;

void emit(const std::string& text, const std::optional<std::string>& path) {
    if (!path) {
        std::cout << text;
        return;
    }
    std::ofstream out(*path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + *path + "'");
    out << text;
}

int cmd_verify(const std::string& path, const std::string& format, std::uint64_t seed, int jobs) {
    ScenarioFile f = load_scenario_file_path(path, seed);
    log(LogLevel::info, "loaded " + std::to_string(f.scenarios.size()) + " scenarios from " + path);
    BatchResult res = batch_verify(f.scenarios, f.options, jobs);

    int violations = 0;
    for (const auto& r : res.reports) {
        if (r.error) log(LogLevel::info, r.name + ": error: " + *r.error);
        else if (!r.precondition_ok) log(LogLevel::info, r.name + ": flagged: " + r.precondition_note);
        else if (!r.passed()) ++violations;
        if (r.precondition_ok && !r.error)
            log(LogLevel::debug, r.name + ": lhs " + format_double(r.lhs) + " rhs " + format_double(r.rhs_total) +
                                     " eps " + format_double(r.eps_solve));
    }

    std::ostringstream out;
    if (format == "csv") {
        out << csv_header() << "\n";
        for (const auto& r : res.reports) out << csv_row(r) << "\n";
    } else {
        Json reports = Json::array();
        for (const auto& r : res.reports) reports.push_back(to_json(r));
        out << Json{{"reports", std::move(reports)}, {"summary", to_json(res.summary)}}.dump(2) << "\n";
    }
    emit(out.str(), f.output);

    log(LogLevel::info, std::to_string(res.summary.passed) + "/" + std::to_string(res.summary.checked) +
                            " checked scenarios within bound, " + std::to_string(res.summary.flagged) +
                            " flagged, " + std::to_string(res.summary.errors) + " errors");
    if (violations > 0) return kViolation;
    if (res.summary.errors > 0) return kSolveError;
    return kOk;
}

int cmd_kernel_dist(const std::string& path, const std::string& format, std::optional<int> resolution) {
    ScenarioFile f = load_scenario_file_path(path, 0, resolution);
    log(LogLevel::info, "ground space with " + std::to_string(f.space.size()) + " points, diameter " +
                            format_double(f.space.diameter()));
    std::vector<KernelDistance> rows;
    bool exceeded = false;
    for (const auto& pair : f.kernel_pairs) {
        rows.push_back(kernel_distance(f, pair));
        if (!rows.back().within_bound()) exceeded = true;
    }
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    if (format == "csv") {
        out << "name,family,measured,bound,ratio,within_bound\n";
        for (const auto& r : rows)
            out << r.name << ',' << r.family << ',' << format_double(r.measured) << ',' << opt(r.bound) << ','
                << opt(r.ratio) << ',' << (r.within_bound() ? "true" : "false") << "\n";
    } else {
        Json pairs = Json::array();
        for (const auto& r : rows) {
            Json j{{"name", r.name}, {"family", r.family}, {"measured", r.measured}, {"within_bound", r.within_bound()}};
            j["bound"] = r.bound ? Json(*r.bound) : Json(nullptr);
            j["ratio"] = r.ratio ? Json(*r.ratio) : Json(nullptr);
            pairs.push_back(std::move(j));
        }
        out << Json{{"pairs", std::move(pairs)}, {"grid_points", f.space.size()}, {"diameter", f.space.diameter()}}
                   .dump(2)
            << "\n";
    }
    emit(out.str(), f.output);
    return exceeded ? kViolation : kOk;
}

int cmd_train(const std::string& path, const std::optional<std::string>& mode) {
    ScenarioFile f = load_scenario_file_path(path);
    if (!f.train) throw SchemaError("/train", "missing required field");
    const TrainSpec& t = *f.train;
    SolverOptions opts = f.options;
    if (mode) opts.mode = options_from_json(Json{{"mode", *mode}}, "--mode").mode;
    const DiscreteMeasure& p = f.measures.at(t.measure);
    const Kernel& k = f.kernels.at(t.kernel);
    try {
        SolveReport rep = solve(p, t.lambda, k, t.loss, opts);
        double lip = std::visit(
            [](const auto& l) -> double {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Loss>) return loss_constants(l).lip;
                else return pairwise_constants(l).sep_lip;
            },
            t.loss);
        double kappa = sup_norm(k, f.space);
        double bound = lip * kappa / t.lambda;
        double hn = h_norm(rep.hypothesis);
        Json out{{"report", to_json(rep)},
                 {"h_norm_bound", bound},
                 {"h_norm_within_bound", hn <= bound + rep.fixed_point_residual + 1e-15}};
        emit(out.dump(2) + "\n", f.output);
        log(LogLevel::info, "converged in " + std::to_string(rep.iterations) + " iterations (" + rep.mode_used + ")");
        return kOk;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        const auto& tr = e.grad_norm_trace;
        std::cerr << "iterations: " << tr.size() << "\n";
        std::size_t from = tr.size() > 10 ? tr.size() - 10 : 0;
        std::cerr << "last gradient norms:";
        for (std::size_t i = from; i < tr.size(); ++i) std::cerr << ' ' << format_double(tr[i]);
        std::cerr << "\n";
        return kSolveError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train kernel-regularized risk minimizers and verify total-stability bounds"};
    app.require_subcommand(1);

    std::string path;
    std::string format = "json";
    std::uint64_t seed = 0;
    int jobs = 1;
    std::optional<int> resolution;
    std::optional<std::string> mode;

    auto* verify = app.add_subcommand("verify", "Verify the stability bounds for every scenario in a file");
    verify->add_option("file", path, "Scenario file")->required();
    verify->add_option("--out", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    verify->add_option("--seed", seed, "Seed for the random section");
    verify->add_option("--jobs", jobs, "Parallel scenarios")->check(CLI::PositiveNumber);

    auto* kdist = app.add_subcommand("kernel-dist", "Compare measured kernel distances with analytic bounds");
    kdist->add_option("file", path, "Scenario file")->required();
    kdist->add_option("--out", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    kdist->add_option("--grid-resolution", resolution, "Override the grid resolution")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "Run a single solve and print its report");
    train->add_option("file", path, "Scenario file")->required();
    train->add_option("--mode", mode, "Solver mode")->check(CLI::IsMember({"auto", "fixed_point", "gradient"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*verify) return cmd_verify(path, format, seed, jobs);
        if (*kdist) return cmd_kernel_dist(path, format, resolution);
        return cmd_train(path, mode);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kInputError;
    } catch (const ArgumentError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const DomainMismatchError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const CapabilityError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return kInputError;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolveError;
    }
}
