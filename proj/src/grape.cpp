#include "rydpulse/grape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "rydpulse/parallel.hpp"
#include "rydpulse/rng.hpp"
#include "rydpulse/statistics.hpp"

namespace rydpulse {

namespace {

constexpr double kOverlapFloor = 1e-300;

InitScheme parse_init_scheme(const std::string& name) {
    if (name == "uniform") return InitScheme::uniform_random;
    if (name == "constant") return InitScheme::constant_mid;
    throw std::invalid_argument("unknown grape.init_scheme '" + name + "' (expected uniform or constant)");
}

std::string to_string(InitScheme scheme) {
    return scheme == InitScheme::uniform_random ? "uniform" : "constant";
}

}  // namespace

void validate(const GrapeConfig& c) {
    if (c.m_segments < 2) throw std::invalid_argument("grape: m_segments must be at least 2");
    if (!(c.t_max > 0.0)) throw std::invalid_argument("grape: t_max must be positive");
    if (c.a1 < 0.0 || c.a2 < 0.0 || c.a3 < 0.0) throw std::invalid_argument("grape: penalty weights must be non-negative");
    if (c.alpha < 1.0) throw std::invalid_argument("grape: alpha must be >= 1");
    if (!(c.omega_max > 0.0) || !(c.delta_max > 0.0)) throw std::invalid_argument("grape: amplitude bounds must be positive");
    if (c.n_restarts < 1) throw std::invalid_argument("grape: n_restarts must be >= 1");
    if (c.max_iters < 0) throw std::invalid_argument("grape: max_iters must be >= 0");
}

nlohmann::json to_json(const GrapeConfig& c) {
    return {{"m_segments", c.m_segments}, {"t_max", c.t_max},         {"a1", c.a1},
            {"a2", c.a2},                 {"a3", c.a3},               {"alpha", c.alpha},
            {"omega_max", c.omega_max},   {"delta_max", c.delta_max}, {"n_restarts", c.n_restarts},
            {"optimizer", to_string(c.optimizer)},
            {"max_iters", c.max_iters},   {"grad_tol", c.grad_tol},   {"target_infidelity", c.target_infidelity},
            {"init_scheme", to_string(c.init_scheme)}};
}

GrapeConfig grape_config_from_json(const nlohmann::json& doc, GrapeConfig c) {
    auto read = [&](const char* key, auto& field) {
        if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("m_segments", c.m_segments);
    read("t_max", c.t_max);
    read("a1", c.a1);
    read("a2", c.a2);
    read("a3", c.a3);
    read("alpha", c.alpha);
    read("omega_max", c.omega_max);
    read("delta_max", c.delta_max);
    read("n_restarts", c.n_restarts);
    read("max_iters", c.max_iters);
    read("grad_tol", c.grad_tol);
    read("target_infidelity", c.target_infidelity);
    if (doc.contains("optimizer")) c.optimizer = parse_optimizer_kind(doc.at("optimizer").get<std::string>());
    if (doc.contains("init_scheme")) c.init_scheme = parse_init_scheme(doc.at("init_scheme").get<std::string>());
    return c;
}

ControlProblem make_control_problem(const SectorOperators& ops, const SectorBasis& basis, StateVector target) {
    if (target.basis != BasisTag::sector || target.amplitudes.size() != ops.dim()) {
        throw std::invalid_argument("control problem: target must be a sector state of dimension " +
                                    std::to_string(ops.dim()));
    }
    const double norm = target.norm();
    if (std::abs(norm - 1.0) > 1e-8) throw std::invalid_argument("control problem: target is not normalised");
    return {&ops, default_initial(basis), std::move(target)};
}

Eigen::VectorXd pack(const PulseSequence& seq) {
    const auto m = static_cast<Eigen::Index>(seq.size());
    Eigen::VectorXd p(3 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
        p[k] = seq.segments[k].rabi;
        p[m + k] = seq.segments[k].detuning;
        p[2 * m + k] = seq.segments[k].dt;
    }
    return p;
}

PulseSequence unpack(const Eigen::VectorXd& p) {
    if (p.size() % 3 != 0) throw std::invalid_argument("unpack: parameter vector length must be a multiple of 3");
    const Eigen::Index m = p.size() / 3;
    PulseSequence seq;
    seq.segments.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) seq.segments[k] = {p[2 * m + k], p[k], p[m + k]};
    return seq;
}

double cost_pulse(const PulseSequence& seq, const GrapeConfig& c) {
    validate(seq);
    if (seq.size() < 2) throw std::invalid_argument("cost_pulse: need at least two segments");
    double smooth = 0.0;
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
        const auto& a = seq.segments[k];
        const auto& b = seq.segments[k + 1];
        const double tau = 0.5 * (a.dt + b.dt);
        smooth += (std::pow(b.detuning - a.detuning, 2) + std::pow(b.rabi - a.rabi, 2)) / tau;
    }
    const double u = seq.total_time() / c.t_max;
    return c.a1 * smooth + c.a2 * std::exp(std::pow(u, c.alpha));
}

double cost_amp(const PulseSequence& seq, const GrapeConfig& c) {
    double total = 0.0;
    for (const auto& s : seq.segments) {
        total += std::pow(std::max(0.0, std::abs(s.detuning) - c.delta_max), 2) +
                 std::pow(std::max(0.0, s.rabi - c.omega_max), 2);
    }
    return c.a3 * total;
}

Eigen::VectorXd gradient_pulse(const PulseSequence& seq, const GrapeConfig& c) {
    validate(seq);
    const auto m = static_cast<Eigen::Index>(seq.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * m);
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
        const auto& a = seq.segments[k];
        const auto& b = seq.segments[k + 1];
        const double tau = 0.5 * (a.dt + b.dt);
        const double d_rabi = b.rabi - a.rabi;
        const double d_det = b.detuning - a.detuning;
        g[k] -= c.a1 * 2.0 * d_rabi / tau;
        g[k + 1] += c.a1 * 2.0 * d_rabi / tau;
        g[m + k] -= c.a1 * 2.0 * d_det / tau;
        g[m + k + 1] += c.a1 * 2.0 * d_det / tau;
        const double dtau = -c.a1 * (d_rabi * d_rabi + d_det * d_det) / (tau * tau) * 0.5;
        g[2 * m + k] += dtau;
        g[2 * m + k + 1] += dtau;
    }
    const double u = seq.total_time() / c.t_max;
    const double dtime = c.a2 * std::exp(std::pow(u, c.alpha)) * c.alpha * std::pow(u, c.alpha - 1.0) / c.t_max;
    g.tail(m).array() += dtime;
    return g;
}

Eigen::VectorXd gradient_amp(const PulseSequence& seq, const GrapeConfig& c) {
    const auto m = static_cast<Eigen::Index>(seq.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& s = seq.segments[k];
        g[k] = 2.0 * c.a3 * std::max(0.0, s.rabi - c.omega_max);
        const double excess = std::max(0.0, std::abs(s.detuning) - c.delta_max);
        g[m + k] = 2.0 * c.a3 * excess * (s.detuning < 0.0 ? -1.0 : 1.0);
    }
    return g;
}

namespace {

// Forward pass, optionally followed by the adjoint sweep for ∂A/∂θ where
// A = <target|U|ψ0>.
struct PhysicalPass {
    std::complex<double> overlap;
    Eigen::VectorXd grad;  // of -log|A|², packed order
};

PhysicalPass physical_pass(const PulseSequence& seq, const ControlProblem& problem, bool with_gradient) {
    validate(seq);
    const SectorOperators& ops = *problem.ops;
    const auto m = static_cast<Eigen::Index>(seq.size());
    std::vector<SegmentSpectrum> spectra(m);
    std::vector<Eigen::VectorXcd> states(m + 1);
    states[0] = problem.initial.amplitudes;
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& s = seq.segments[k];
        spectra[k] = diagonalize(assemble({s.rabi, s.detuning}, ops));
        states[k + 1] = apply_propagator(spectra[k], s.dt, states[k]);
    }
    PhysicalPass out;
    out.overlap = problem.target.amplitudes.dot(states[m]);  // conjugates the target
    if (!with_gradient) return out;

    const double fid = std::max(std::norm(out.overlap), kOverlapFloor);
    out.grad = Eigen::VectorXd::Zero(3 * m);
    const Eigen::Index dim = ops.dim();
    Eigen::VectorXcd costate = problem.target.amplitudes;
    Eigen::MatrixXcd w(dim, dim);
    for (Eigen::Index k = m - 1; k >= 0; --k) {
        const auto& seg = seq.segments[k];
        const auto& v = spectra[k].eigenvectors;
        const auto& lambda = spectra[k].eigenvalues;
        const Eigen::VectorXcd x = v.transpose() * states[k];
        const Eigen::VectorXcd y = v.transpose() * costate;

        std::complex<double> d_dt = 0.0;
        Eigen::VectorXcd phase(dim);
        for (Eigen::Index a = 0; a < dim; ++a) {
            phase[a] = std::polar(1.0, -seg.dt * lambda[a]);
            d_dt += std::conj(y[a]) * lambda[a] * phase[a] * x[a];
        }
        d_dt *= std::complex<double>(0.0, -1.0);

        // Divided differences of exp(-i dt λ) in the stable form
        // -i dt exp(-i dt (λa+λb)/2) sinc(dt (λa-λb)/2).
        for (Eigen::Index b = 0; b < dim; ++b) {
            for (Eigen::Index a = 0; a < dim; ++a) {
                const double half = 0.5 * seg.dt * (lambda[a] - lambda[b]);
                const double sinc = std::abs(half) < 1e-10 ? 1.0 : std::sin(half) / half;
                const std::complex<double> kernel =
                    std::complex<double>(0.0, -seg.dt * sinc) * std::polar(1.0, -0.5 * seg.dt * (lambda[a] + lambda[b]));
                w(a, b) = std::conj(y[a]) * kernel * x[b];
            }
        }
        const Eigen::MatrixXd jx_eig = v.transpose() * ops.jx * v;
        const Eigen::MatrixXd n_eig = v.transpose() * ops.n_diag.asDiagonal() * v;
        const std::complex<double> d_rabi = (w.array() * jx_eig.array().cast<std::complex<double>>()).sum();
        const std::complex<double> d_det = -(w.array() * n_eig.array().cast<std::complex<double>>()).sum();

        auto to_cost = [&](std::complex<double> d_overlap) {
            return -2.0 * (std::conj(out.overlap) * d_overlap).real() / fid;
        };
        out.grad[k] = to_cost(d_rabi);
        out.grad[m + k] = to_cost(d_det);
        out.grad[2 * m + k] = to_cost(d_dt);

        costate = v * (phase.conjugate().cwiseProduct(y));
    }
    return out;
}

}  // namespace

double cost_phys(const PulseSequence& seq, const ControlProblem& problem) {
    const auto pass = physical_pass(seq, problem, false);
    return -std::log(std::max(std::norm(pass.overlap), kOverlapFloor));
}

double infidelity(const PulseSequence& seq, const ControlProblem& problem) {
    const auto pass = physical_pass(seq, problem, false);
    return std::clamp(1.0 - std::norm(pass.overlap), 0.0, 1.0);
}

double total_cost(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config) {
    return cost_phys(seq, problem) + cost_pulse(seq, config) + cost_amp(seq, config);
}

CostTerms evaluate(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config,
                   Eigen::VectorXd* grad) {
    const auto pass = physical_pass(seq, problem, grad != nullptr);
    CostTerms terms;
    terms.fidelity = std::norm(pass.overlap);
    terms.phys = -std::log(std::max(terms.fidelity, kOverlapFloor));
    terms.pulse = cost_pulse(seq, config);
    terms.amp = cost_amp(seq, config);
    if (grad) *grad = pass.grad + gradient_pulse(seq, config) + gradient_amp(seq, config);
    return terms;
}

Eigen::VectorXd gradient_phys(const PulseSequence& seq, const ControlProblem& problem) {
    return physical_pass(seq, problem, true).grad;
}

Eigen::VectorXd gradient(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config) {
    Eigen::VectorXd g;
    evaluate(seq, problem, config, &g);
    return g;
}

int GrapeResult::n_converged() const {
    return static_cast<int>(std::count_if(restarts.begin(), restarts.end(), [](const RestartTrace& r) { return r.converged; }));
}

nlohmann::json to_json(const GrapeResult& r) {
    nlohmann::json restarts = nlohmann::json::array();
    for (const auto& t : r.restarts) {
        restarts.push_back({{"restart_id", t.restart_id},
                            {"final_cost", t.final_cost},
                            {"infidelity", t.infidelity},
                            {"t_total", t.t_total},
                            {"iterations", t.iterations},
                            {"evaluations", t.evaluations},
                            {"status", t.status},
                            {"converged", t.converged},
                            {"failed", t.failed}});
    }
    nlohmann::json target = {{"target_id", r.target.target_id}};
    target["normalized_entropy"] = r.target.normalized_entropy ? nlohmann::json(*r.target.normalized_entropy) : nlohmann::json();
    target["generation_t_final"] = r.target.generation_t_final ? nlohmann::json(*r.target.generation_t_final) : nlohmann::json();
    return {{"best_sequence", to_json(r.best_sequence)},
            {"best_infidelity", r.best_infidelity},
            {"t_opt", r.t_opt},
            {"best_restart", r.best_restart},
            {"n_restarts_converged", r.n_converged()},
            {"target", target},
            {"restarts", restarts}};
}

PulseSequence project_to_bounds(PulseSequence seq, const GrapeConfig& config) {
    for (auto& s : seq.segments) {
        s.rabi = std::clamp(s.rabi, 0.0, config.omega_max);
        s.detuning = std::clamp(s.detuning, -config.delta_max, config.delta_max);
    }
    return seq;
}

namespace {

// Smooth bijections keeping Ω > 0 and dt > 0: value = scale * softplus(k x) / k.
constexpr double kSharpness = 10.0;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }
double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

struct Reparameterization {
    double rabi_scale, detuning_scale, dt_scale;
    Eigen::Index m;

    PulseSequence to_sequence(const Eigen::VectorXd& x) const {
        PulseSequence seq;
        seq.segments.resize(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            seq.segments[k].rabi = rabi_scale * softplus(kSharpness * x[k]) / kSharpness;
            seq.segments[k].detuning = detuning_scale * x[m + k];
            seq.segments[k].dt = dt_scale * softplus(kSharpness * x[2 * m + k]) / kSharpness;
        }
        return seq;
    }

    Eigen::VectorXd from_sequence(const PulseSequence& seq) const {
        Eigen::VectorXd x(3 * m);
        auto inv = [](double value, double scale) {
            return softplus_inverse(kSharpness * std::max(value / scale, 1e-6)) / kSharpness;
        };
        for (Eigen::Index k = 0; k < m; ++k) {
            x[k] = inv(seq.segments[k].rabi, rabi_scale);
            x[m + k] = seq.segments[k].detuning / detuning_scale;
            x[2 * m + k] = inv(seq.segments[k].dt, dt_scale);
        }
        return x;
    }

    // Chain rule from the physical gradient to the optimiser variables.
    Eigen::VectorXd pull_back(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
        Eigen::VectorXd out(3 * m);
        for (Eigen::Index k = 0; k < m; ++k) {
            out[k] = g[k] * rabi_scale * sigmoid(kSharpness * x[k]);
            out[m + k] = g[m + k] * detuning_scale;
            out[2 * m + k] = g[2 * m + k] * dt_scale * sigmoid(kSharpness * x[2 * m + k]);
        }
        return out;
    }
};

PulseSequence initial_pulse(Rng& rng, const GrapeConfig& c) {
    PulseSequence seq;
    seq.segments.resize(c.m_segments);
    std::uniform_real_distribution<double> rabi(0.0, c.omega_max);
    std::uniform_real_distribution<double> detuning(-c.delta_max, c.delta_max);
    for (auto& s : seq.segments) {
        s.dt = c.t_max / c.m_segments;
        if (c.init_scheme == InitScheme::uniform_random) {
            s.rabi = rabi(rng);
            s.detuning = detuning(rng);
        } else {
            s.rabi = 0.5 * c.omega_max;
            s.detuning = 0.0;
        }
    }
    return seq;
}

struct RestartOutcome {
    RestartTrace trace;
    PulseSequence sequence;
};

RestartOutcome run_restart(const ControlProblem& problem, const GrapeConfig& c, std::uint64_t master_seed,
                           std::int64_t target_id, int restart_id) {
    Rng rng = make_stream(master_seed, {static_cast<std::uint64_t>(StreamTag::grape_restart), static_cast<std::uint64_t>(target_id),
                                        static_cast<std::uint64_t>(restart_id)});
    const Reparameterization map{c.omega_max, c.delta_max, c.t_max / c.m_segments, c.m_segments};

    double last_fidelity = 0.0;
    const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        const PulseSequence seq = map.to_sequence(x);
        Eigen::VectorXd g;
        const CostTerms terms = evaluate(seq, problem, c, grad ? &g : nullptr);
        last_fidelity = terms.fidelity;
        if (grad) *grad = map.pull_back(x, g);
        return terms.total();
    };
    const StopPredicate stop = [&](const Eigen::VectorXd&, double) {
        return 1.0 - last_fidelity <= c.target_infidelity;
    };

    OptimizerOptions options;
    options.kind = c.optimizer;
    options.max_iters = c.max_iters;
    options.grad_tol = c.grad_tol;

    RestartOutcome out;
    out.trace.restart_id = restart_id;
    try {
        const auto report = minimize(objective, map.from_sequence(initial_pulse(rng, c)), options, stop);
        out.sequence = project_to_bounds(map.to_sequence(report.x), c);
        out.trace.final_cost = report.value;
        out.trace.iterations = report.iterations;
        out.trace.evaluations = report.evaluations;
        out.trace.status = to_string(report.status);
        out.trace.failed = report.status == OptimizerStatus::diverged;
        out.trace.converged = report.status == OptimizerStatus::grad_tol ||
                              report.status == OptimizerStatus::stop_predicate ||
                              report.status == OptimizerStatus::line_search_stalled;
        out.trace.infidelity = infidelity(out.sequence, problem);
        out.trace.t_total = out.sequence.total_time();
        if (!std::isfinite(out.trace.infidelity)) out.trace.failed = true;
    } catch (const std::exception& e) {
        out.trace.failed = true;
        out.trace.status = std::string("error: ") + e.what();
    }
    return out;
}

}  // namespace

GrapeResult optimize(const ControlProblem& problem, const GrapeConfig& config, std::uint64_t master_seed,
                     const TargetInfo& target) {
    validate(config);
    if (!problem.ops) throw std::invalid_argument("optimize: control problem has no operators");
    std::vector<RestartOutcome> outcomes(config.n_restarts);
    parallel_for(outcomes.size(), config.workers, [&](std::size_t r) {
        outcomes[r] = run_restart(problem, config, master_seed, target.target_id, static_cast<int>(r));
    });

    GrapeResult result;
    result.target = target;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        const auto& o = outcomes[r];
        result.restarts.push_back(o.trace);
        if (o.trace.failed) continue;
        if (result.best_restart < 0 || o.trace.infidelity < result.best_infidelity) {
            result.best_restart = static_cast<int>(r);
            result.best_infidelity = o.trace.infidelity;
            result.best_sequence = o.sequence;
        }
    }
    if (result.best_restart < 0) throw std::runtime_error("optimize: every restart failed");
    result.t_opt = result.best_sequence.total_time();
    return result;
}

StratifiedSelection stratified_targets(const std::vector<TargetCandidate>& pool, int n_bins, int per_bin) {
    if (n_bins < 1 || per_bin < 1) throw std::invalid_argument("stratified_targets: n_bins and per_bin must be positive");
    StratifiedSelection out;
    out.per_bin.assign(n_bins, 0);
    if (pool.empty()) {
        for (int b = 0; b < n_bins; ++b) out.empty_bins.push_back(b);
        return out;
    }
    double lo = pool.front().normalized_entropy, hi = lo;
    for (const auto& c : pool) {
        lo = std::min(lo, c.normalized_entropy);
        hi = std::max(hi, c.normalized_entropy);
    }
    if (hi <= lo) hi = lo + 1e-12;
    out.edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b) out.edges[b] = lo + (hi - lo) * b / n_bins;

    // bins[b] holds, per generation time in first-appearance order, the pool indices.
    std::vector<std::vector<std::vector<std::size_t>>> bins(n_bins);
    std::vector<double> times;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto it = std::find(times.begin(), times.end(), pool[i].generation_t_final);
        const auto group = static_cast<std::size_t>(it - times.begin());
        if (it == times.end()) times.push_back(pool[i].generation_t_final);
        int b = static_cast<int>((pool[i].normalized_entropy - lo) / (hi - lo) * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        if (bins[b].size() <= group) bins[b].resize(group + 1);
        bins[b][group].push_back(i);
    }
    for (int b = 0; b < n_bins; ++b) {
        std::vector<std::size_t> cursor(bins[b].size(), 0);
        bool progressed = true;
        while (out.per_bin[b] < per_bin && progressed) {
            progressed = false;
            for (std::size_t g = 0; g < bins[b].size() && out.per_bin[b] < per_bin; ++g) {
                if (cursor[g] < bins[b][g].size()) {
                    out.selected.push_back(bins[b][g][cursor[g]++]);
                    ++out.per_bin[b];
                    progressed = true;
                }
            }
        }
        if (out.per_bin[b] == 0) out.empty_bins.push_back(b);
    }
    return out;
}

std::vector<SuccessBin> success_curve(const std::vector<StudyPoint>& points, double gamma, double delta_s) {
    if (points.empty()) throw std::invalid_argument("success_curve: no results");
    if (!(delta_s > 0.0)) throw std::invalid_argument("success_curve: delta_s must be positive");
    std::map<long, std::vector<double>> grouped;
    for (const auto& p : points) grouped[static_cast<long>(std::floor(p.normalized_entropy / delta_s))].push_back(p.infidelity);
    std::vector<SuccessBin> out;
    for (const auto& [index, infidelities] : grouped) {
        SuccessBin bin;
        bin.lo = index * delta_s;
        bin.hi = bin.lo + delta_s;
        bin.count = infidelities.size();
        bin.successes = static_cast<std::size_t>(
            std::count_if(infidelities.begin(), infidelities.end(), [&](double i) { return i <= gamma; }));
        bin.probability = static_cast<double>(bin.successes) / bin.count;
        const auto s = summarize(infidelities);
        bin.median = s.median;
        bin.q16 = s.lo;
        bin.q84 = s.hi;
        out.push_back(bin);
    }
    return out;
}

}  // namespace rydpulse
