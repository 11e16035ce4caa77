#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rydpulse/evolution.hpp"
#include "rydpulse/optimizer.hpp"

namespace rydpulse {

enum class InitScheme { uniform_random, constant_mid };

struct GrapeConfig {
    int m_segments = 30;
    double t_max = 6.0;        // µs
    double a1 = 1e-4;          // smoothness weight
    double a2 = 1e-2;          // total-time weight
    double a3 = 10.0;          // amplitude hinge weight
    double alpha = 4.0;        // time-penalty exponent
    double omega_max = 12.0;
    double delta_max = 20.0;
    int n_restarts = 16;
    OptimizerKind optimizer = OptimizerKind::lbfgs;
    int max_iters = 2000;
    double grad_tol = 1e-7;
    // Restarts stop early once the infidelity drops below this value.
    double target_infidelity = 1e-8;
    InitScheme init_scheme = InitScheme::uniform_random;
    int workers = 1;
};

void validate(const GrapeConfig& config);
nlohmann::json to_json(const GrapeConfig& config);
// Reads any subset of the fields above; missing keys keep their defaults.
GrapeConfig grape_config_from_json(const nlohmann::json& doc, GrapeConfig base = {});

// Everything the cost needs besides the pulse: operators at the preparation
// spacing, the initial state, and a normalised sector target.
struct ControlProblem {
    const SectorOperators* ops = nullptr;
    StateVector initial;
    StateVector target;
};

ControlProblem make_control_problem(const SectorOperators& ops, const SectorBasis& basis, StateVector target);

// -log |<target|U|ψ0>|², with the squared overlap clamped below at 1e-300.
double cost_phys(const PulseSequence& seq, const ControlProblem& problem);
double cost_pulse(const PulseSequence& seq, const GrapeConfig& config);
double cost_amp(const PulseSequence& seq, const GrapeConfig& config);
double total_cost(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config);
double infidelity(const PulseSequence& seq, const ControlProblem& problem);

struct CostTerms {
    double phys = 0.0;
    double pulse = 0.0;
    double amp = 0.0;
    double fidelity = 0.0;
    double total() const { return phys + pulse + amp; }
};

// Parameter order for gradients: [Ω_0..Ω_{M-1}, Δ_0..Δ_{M-1}, dt_0..dt_{M-1}].
Eigen::VectorXd pack(const PulseSequence& seq);
PulseSequence unpack(const Eigen::VectorXd& params);

// Total cost and, if grad != nullptr, its exact gradient in the packed order.
// The physical term uses forward states and backward costates with the
// Fréchet derivative of exp(-i dt H) taken in the eigenbasis of each segment.
CostTerms evaluate(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config,
                   Eigen::VectorXd* grad);

Eigen::VectorXd gradient(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config);
Eigen::VectorXd gradient_phys(const PulseSequence& seq, const ControlProblem& problem);
Eigen::VectorXd gradient_pulse(const PulseSequence& seq, const GrapeConfig& config);
Eigen::VectorXd gradient_amp(const PulseSequence& seq, const GrapeConfig& config);

struct RestartTrace {
    int restart_id = 0;
    double final_cost = 0.0;
    double infidelity = 1.0;
    double t_total = 0.0;
    int iterations = 0;
    int evaluations = 0;
    std::string status;
    bool converged = false;
    bool failed = false;
};

struct TargetInfo {
    std::int64_t target_id = 0;
    std::optional<double> normalized_entropy;
    std::optional<double> generation_t_final;
};

struct GrapeResult {
    PulseSequence best_sequence;
    double best_infidelity = 1.0;
    double t_opt = 0.0;
    int best_restart = -1;
    std::vector<RestartTrace> restarts;
    TargetInfo target;

    int n_converged() const;
};

nlohmann::json to_json(const GrapeResult& result);

// Clamps Ω into [0, Ω_max] and Δ into [-Δ_max, Δ_max].
PulseSequence project_to_bounds(PulseSequence seq, const GrapeConfig& config);

// Multi-start optimisation. Restart r of target t draws its initial pulse from
// stream (master_seed, t, r); the winner is chosen by infidelity after the
// final projection onto the amplitude bounds. Throws only if every restart fails.
GrapeResult optimize(const ControlProblem& problem, const GrapeConfig& config, std::uint64_t master_seed,
                     const TargetInfo& target = {});

struct TargetCandidate {
    double normalized_entropy = 0.0;
    double generation_t_final = 0.0;
};

struct StratifiedSelection {
    std::vector<double> edges;
    std::vector<std::size_t> selected;  // indices into the pool
    std::vector<int> per_bin;
    std::vector<int> empty_bins;
};

// Uniform bins over the observed entropy range; up to `per_bin` candidates
// per bin, taken round-robin over generation times (in order of first
// appearance) and in pool order within each time.
StratifiedSelection stratified_targets(const std::vector<TargetCandidate>& pool, int n_bins, int per_bin);

struct StudyPoint {
    double normalized_entropy = 0.0;
    double infidelity = 1.0;
};

struct SuccessBin {
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    std::size_t successes = 0;
    double probability = 0.0;
    double median = 0.0, q16 = 0.0, q84 = 0.0;  // infidelity
};

// P(I <= gamma | S in [lo, lo + delta_s)) on bins anchored at 0; only
// occupied bins are returned.
std::vector<SuccessBin> success_curve(const std::vector<StudyPoint>& points, double gamma, double delta_s);

}  // namespace rydpulse
