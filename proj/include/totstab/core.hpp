#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace totstab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// requested operation needs a property the loss/kernel does not have
struct CapabilityError : std::logic_error {
    using std::logic_error::logic_error;
};

struct PreconditionError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), grad_norm_trace(std::move(trace)) {}
    std::vector<double> grad_norm_trace;
};

} // namespace totstab
