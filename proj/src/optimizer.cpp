#include "rydpulse/optimizer.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace rydpulse {

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "lbfgs" || name == "quasi-newton") return OptimizerKind::lbfgs;
    if (name == "gradient-descent" || name == "gd") return OptimizerKind::gradient_descent;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected lbfgs or gradient-descent)");
}

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::lbfgs ? "lbfgs" : "gradient-descent";
}

std::string to_string(OptimizerStatus status) {
    switch (status) {
        case OptimizerStatus::grad_tol: return "grad_tol";
        case OptimizerStatus::stop_predicate: return "target_reached";
        case OptimizerStatus::max_iters: return "max_iters";
        case OptimizerStatus::line_search_stalled: return "line_search_stalled";
        case OptimizerStatus::diverged: break;
    }
    return "diverged";
}

namespace {

struct CurvaturePair {
    Eigen::VectorXd s, y;
    double rho;
};

Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::deque<CurvaturePair>& history) {
    Eigen::VectorXd q = -g;
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
        alpha[i] = history[i].rho * history[i].s.dot(q);
        q -= alpha[i] * history[i].y;
    }
    if (!history.empty()) {
        const auto& last = history.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        const double beta = history[i].rho * history[i].y.dot(q);
        q += (alpha[i] - beta) * history[i].s;
    }
    return q;
}

}  // namespace

OptimizerReport minimize(const Objective& f, Eigen::VectorXd x0, const OptimizerOptions& opt,
                         const StopPredicate& stop) {
    OptimizerReport report;
    Eigen::VectorXd g(x0.size());
    double value = f(x0, &g);
    report.evaluations = 1;
    report.x = x0;
    report.value = value;
    if (!std::isfinite(value) || !g.allFinite()) {
        report.status = OptimizerStatus::diverged;
        return report;
    }
    report.accepted_values.push_back(value);
    if (stop && stop(x0, value)) {
        report.status = OptimizerStatus::stop_predicate;
        return report;
    }

    std::deque<CurvaturePair> history;
    Eigen::VectorXd x = std::move(x0);
    double last_step = 1.0;
    Eigen::VectorXd g_new(x.size());

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
            report.status = OptimizerStatus::grad_tol;
            return report;
        }
        Eigen::VectorXd d;
        double step = 1.0;
        if (opt.kind == OptimizerKind::lbfgs && !history.empty()) {
            d = lbfgs_direction(g, history);
            if (d.dot(g) >= 0.0) {  // lost positive definiteness; restart from steepest descent
                history.clear();
                d = -g;
                step = 1.0 / std::max(1.0, g.norm());
            }
        } else {
            d = -g;
            step = opt.kind == OptimizerKind::lbfgs ? 1.0 / std::max(1.0, g.norm()) : 2.0 * last_step;
        }

        const double slope = g.dot(d);
        bool accepted = false;
        double trial_value = 0.0;
        Eigen::VectorXd trial;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            trial = x + step * d;
            trial_value = f(trial, &g_new);
            ++report.evaluations;
            if (std::isfinite(trial_value) && g_new.allFinite() &&
                trial_value <= value + opt.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            report.status = OptimizerStatus::line_search_stalled;
            return report;
        }

        const Eigen::VectorXd s = trial - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (opt.kind == OptimizerKind::lbfgs && sy > 1e-12 * s.norm() * y.norm()) {
            history.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(history.size()) > opt.memory) history.pop_front();
        }
        last_step = step;
        x = std::move(trial);
        g = g_new;
        value = trial_value;
        report.x = x;
        report.value = value;
        report.iterations = iter + 1;
        report.accepted_values.push_back(value);
        if (stop && stop(x, value)) {
            report.status = OptimizerStatus::stop_predicate;
            return report;
        }
    }
    report.status = g.lpNorm<Eigen::Infinity>() < opt.grad_tol ? OptimizerStatus::grad_tol : OptimizerStatus::max_iters;
    return report;
}

}  // namespace rydpulse
