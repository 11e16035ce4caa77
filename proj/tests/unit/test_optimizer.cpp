#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "rydpulse/optimizer.hpp"

using namespace rydpulse;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    double f = 0.0;
    if (g) *g = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
        f += 100.0 * a * a + b * b;
        if (g) {
            (*g)[i] += -400.0 * a * x[i] - 2.0 * b;
            (*g)[i + 1] += 200.0 * a;
        }
    }
    return f;
}

bool non_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) if (v[i] > v[i - 1]) return false;
    return true;
}

}  // namespace

TEST_CASE("L-BFGS solves the Rosenbrock valley") {
    OptimizerOptions opts;
    opts.max_iters = 2000;
    opts.grad_tol = 1e-10;
    const auto r = minimize(rosenbrock, Eigen::VectorXd::Constant(6, -1.2), opts);
    CHECK(r.status == OptimizerStatus::grad_tol);
    CHECK((r.x - Eigen::VectorXd::Ones(6)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(non_increasing(r.accepted_values));
    CHECK(r.accepted_values.size() == static_cast<std::size_t>(r.iterations) + 1);
}

TEST_CASE("gradient descent decreases monotonically") {
    OptimizerOptions opts;
    opts.kind = OptimizerKind::gradient_descent;
    opts.max_iters = 300;
    const auto r = minimize(rosenbrock, Eigen::VectorXd::Constant(4, -1.2), opts);
    CHECK(non_increasing(r.accepted_values));
    CHECK(r.value < r.accepted_values.front());
    CHECK(r.status == OptimizerStatus::max_iters);
}

TEST_CASE("quadratic converges quickly and stop predicate fires") {
    const Eigen::VectorXd scale = Eigen::VectorXd::LinSpaced(10, 1.0, 10.0);
    const Objective quad = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = scale.cwiseProduct(x);
        return 0.5 * x.cwiseProduct(scale).dot(x);
    };
    OptimizerOptions opts;
    const auto r = minimize(quad, Eigen::VectorXd::Ones(10), opts);
    CHECK(r.status == OptimizerStatus::grad_tol);
    CHECK(r.iterations < 40);

    const auto s = minimize(quad, Eigen::VectorXd::Ones(10), opts, [](const Eigen::VectorXd&, double v) { return v < 1e-2; });
    CHECK(s.status == OptimizerStatus::stop_predicate);
    CHECK(s.value < 1e-2);
    CHECK(to_string(s.status) == "target_reached");
}

TEST_CASE("stationary start returns immediately") {
    const Objective flat = [](const Eigen::VectorXd&, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Zero(3);
        return 1.0;
    };
    const auto r = minimize(flat, Eigen::VectorXd::Zero(3), {});
    CHECK(r.iterations == 0);
    CHECK(r.status == OptimizerStatus::grad_tol);
}

TEST_CASE("optimizer names") {
    CHECK(parse_optimizer_kind("lbfgs") == OptimizerKind::lbfgs);
    CHECK(parse_optimizer_kind(to_string(OptimizerKind::gradient_descent)) == OptimizerKind::gradient_descent);
    CHECK_THROWS_AS(parse_optimizer_kind("adam"), std::invalid_argument);
}
