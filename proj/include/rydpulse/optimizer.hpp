#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rydpulse {

// Objective returning f(x); writes ∇f(x) into *grad when grad != nullptr.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
// Early-exit predicate evaluated on each accepted iterate.
using StopPredicate = std::function<bool(const Eigen::VectorXd& x, double value)>;

enum class OptimizerKind { lbfgs, gradient_descent };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerOptions {
    OptimizerKind kind = OptimizerKind::lbfgs;
    int max_iters = 1000;
    double grad_tol = 1e-8;   // on the max-norm of the gradient
    int memory = 20;          // L-BFGS history length
    double armijo = 1e-4;
    int max_backtracks = 50;
};

enum class OptimizerStatus { grad_tol, stop_predicate, max_iters, line_search_stalled, diverged };

std::string to_string(OptimizerStatus status);

struct OptimizerReport {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    OptimizerStatus status = OptimizerStatus::max_iters;
    std::vector<double> accepted_values;  // f after every accepted step, starting with f(x0)
};

// Quasi-Newton (L-BFGS two-loop recursion) or steepest descent, both with
// Armijo backtracking, so accepted values never increase.
OptimizerReport minimize(const Objective& f, Eigen::VectorXd x0, const OptimizerOptions& options,
                         const StopPredicate& stop = {});

}  // namespace rydpulse
