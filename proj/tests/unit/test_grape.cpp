#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "full_space.hpp"
#include "rydpulse/grape.hpp"

using namespace rydpulse;

namespace {

struct Fixture {
    SectorBasis basis;
    SectorOperators ops;

    Fixture(int n, double spacing) : basis(dihedral_orbits(n)), ops(build_sector_operators(basis, make_params(n, spacing))) {}
};

// Interior point: amplitudes strictly inside the bounds, durations near T/M.
PulseSequence interior_pulse(Rng& rng, int m, double t_total) {
    std::uniform_real_distribution<double> om(0.5, 11.5), de(-19.0, 19.0), jitter(0.5, 1.5);
    PulseSequence seq;
    for (int k = 0; k < m; ++k) seq.segments.push_back({t_total / m * jitter(rng), om(rng), de(rng)});
    return seq;
}

// Worst componentwise relative error between the analytic gradient and
// central differences of `cost`, with step h = 1e-5 max(1, |θ|) refined by one
// Richardson step (h and h/2) so the h² truncation term does not dominate
// near low-overlap points. Differences below 1e-14 max(1, |F|) / h count as
// agreement: the cost itself carries ~1e-14 relative rounding error after the
// segment eigendecompositions, and the quotient amplifies it by 1/h.
template <class Cost>
double fd_relative_error(const Eigen::VectorXd& g, const Eigen::VectorXd& p, const Cost& cost) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        auto central = [&](double h) {
            Eigen::VectorXd up = p, down = p;
            up[i] += h;
            down[i] -= h;
            return (cost(up) - cost(down)) / (2.0 * h);
        };
        const double h = 1e-5 * std::max(1.0, std::abs(p[i]));
        const double fd = (4.0 * central(0.5 * h) - central(h)) / 3.0;
        const double noise = 1e-14 * std::max(1.0, std::abs(cost(p))) / h;
        const double diff = std::abs(fd - g[i]);
        if (diff > noise) worst = std::max(worst, diff / std::max(std::abs(fd), std::abs(g[i])));
    }
    return worst;
}

double fd_relative_error(const PulseSequence& seq, const ControlProblem& problem, const GrapeConfig& config) {
    return fd_relative_error(gradient(seq, problem, config), pack(seq),
                             [&](const Eigen::VectorXd& q) { return total_cost(unpack(q), problem, config); });
}

}  // namespace

TEST_CASE("finite-difference agreement of the full gradient") {
    Rng rng(1);
    GrapeConfig config;
    config.m_segments = 8;
    for (int n : {5, 9}) {
        const Fixture fx(n, 7.0);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const auto problem = make_control_problem(fx.ops, fx.basis, haar_sector(rng, fx.basis));
            worst = std::max(worst, fd_relative_error(interior_pulse(rng, 8, 3.0), problem, config));
        }
        MESSAGE("N=" << n << " worst relative error " << worst);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("physical cost matches the full-space oracle at N=5") {
    const Fixture fx(5, 6.0);
    Rng rng(2);
    const auto target = haar_sector(rng, fx.basis);
    const auto problem = make_control_problem(fx.ops, fx.basis, target);
    for (int trial = 0; trial < 5; ++trial) {
        const auto seq = interior_pulse(rng, 10, 2.0);
        std::vector<oracle::Segment> segs;
        for (const auto& s : seq.segments) segs.push_back({s.dt, s.rabi, s.detuning});
        const auto full = oracle::full_evolve(5, 6.0, kDefaultC6, segs);
        const double expected = -std::log(std::norm(embed(target, fx.basis).amplitudes.dot(full)));
        CHECK(std::abs(cost_phys(seq, problem) - expected) < 1e-9);
    }
}

TEST_CASE("physical cost limits") {
    const Fixture fx(9, 7.0);
    Rng rng(3);
    const auto seq = interior_pulse(rng, 30, 1.0);
    const auto reached = evolve(default_initial(fx.basis), seq, fx.ops);
    const auto exact = make_control_problem(fx.ops, fx.basis, reached);
    CHECK(std::abs(cost_phys(seq, exact)) < 1e-12);
    CHECK(infidelity(seq, exact) < 1e-12);

    // Orthogonal target: the all-up orbit with Ω = 0 never leaves all-down.
    PulseSequence dark{{{0.1, 0.0, 3.0}, {0.1, 0.0, -3.0}}};
    StateVector up{Eigen::VectorXcd::Unit(fx.basis.dim(), fx.basis.dim() - 1), BasisTag::sector, 9};
    const auto orth = make_control_problem(fx.ops, fx.basis, up);
    const double c = cost_phys(dark, orth);
    CHECK(std::isfinite(c));
    CHECK(c == doctest::Approx(-std::log(1e-300)));
    CHECK(gradient_phys(dark, orth).allFinite());
}

TEST_CASE("pulse cost examples") {
    GrapeConfig config;
    config.a1 = 0.0;
    config.a2 = 1.0;
    config.alpha = 4.0;
    config.t_max = 6.0;
    const PulseSequence flat{{{1.0, 5.0, 2.0}, {1.0, 5.0, 2.0}, {1.0, 5.0, 2.0}}};
    CHECK(cost_pulse(flat, config) == doctest::Approx(std::exp(0.0625)).epsilon(1e-15));
    config.a2 = 0.0;
    CHECK(cost_pulse(flat, config) == 0.0);

    config.a2 = 1.0;
    PulseSequence doubled = flat;
    for (auto& s : doubled.segments) s.dt *= 2.0;
    CHECK(cost_pulse(doubled, config) > cost_pulse(flat, config));

    config.a1 = 1.0;
    config.a2 = 0.0;
    const PulseSequence step{{{0.5, 1.0, 0.0}, {1.5, 4.0, -4.0}}};
    CHECK(cost_pulse(step, config) == doctest::Approx((9.0 + 16.0) / 1.0));
    CHECK_THROWS(cost_pulse(PulseSequence{{{1.0, 1.0, 1.0}}}, config));
    CHECK_THROWS(cost_pulse(PulseSequence{{{1.0, 1.0, 1.0}, {0.0, 1.0, 1.0}}}, config));
}

TEST_CASE("amplitude hinge") {
    GrapeConfig config;
    config.a3 = 10.0;
    const PulseSequence inside{{{0.1, 12.0, -20.0}, {0.1, 0.0, 20.0}}};
    CHECK(cost_amp(inside, config) == 0.0);
    CHECK(gradient_amp(inside, config).cwiseAbs().maxCoeff() == 0.0);  // one-sided at the bound
    const PulseSequence over{{{0.1, 13.0, 0.0}, {0.1, 0.0, -21.5}}};
    CHECK(cost_amp(over, config) == doctest::Approx(10.0 + 10.0 * 2.25));
    const auto g = gradient_amp(over, config);
    CHECK(g[0] == doctest::Approx(20.0));
    CHECK(g[3] == doctest::Approx(-30.0));
}

TEST_CASE("total cost is the sum of its terms") {
    const Fixture fx(9, 7.0);
    Rng rng(4);
    const auto problem = make_control_problem(fx.ops, fx.basis, haar_sector(rng, fx.basis));
    GrapeConfig config;
    config.a3 = 10.0;
    auto seq = interior_pulse(rng, 30, 7.0);
    seq.segments[3].rabi = 14.0;
    const double sum = cost_phys(seq, problem) + cost_pulse(seq, config) + cost_amp(seq, config);
    CHECK(total_cost(seq, problem, config) == sum);
    const auto terms = evaluate(seq, problem, config, nullptr);
    CHECK(terms.total() == doctest::Approx(sum).epsilon(1e-15));

    config.a1 = config.a2 = config.a3 = 0.0;
    CHECK(total_cost(seq, problem, config) == cost_phys(seq, problem));

    // Exact target with a smooth in-bounds pulse: only the time term remains.
    GrapeConfig smooth;
    const PulseSequence gentle{{{0.5, 6.0, 1.0}, {0.5, 6.0, 1.0}}};
    const auto exact = make_control_problem(fx.ops, fx.basis, evolve(default_initial(fx.basis), gentle, fx.ops));
    CHECK(total_cost(gentle, exact, smooth) == doctest::Approx(smooth.a2 * std::exp(std::pow(1.0 / 6.0, 4.0))).epsilon(1e-12));
}

TEST_CASE("physical gradient vanishes at a perfect-fidelity point") {
    const Fixture fx(9, 7.0);
    Rng rng(5);
    const auto seq = interior_pulse(rng, 30, 2.0);
    const auto problem = make_control_problem(fx.ops, fx.basis, evolve(default_initial(fx.basis), seq, fx.ops));
    CHECK(gradient_phys(seq, problem).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gradient near degenerate eigenvalues") {
    // Ω = 0 makes H diagonal with repeated entries (orbits sharing H0 and N),
    // exercising the confluent branch of the kernel.
    const Fixture fx(9, 7.0);
    Rng rng(6);
    const auto problem = make_control_problem(fx.ops, fx.basis, haar_sector(rng, fx.basis));
    GrapeConfig config;
    auto seq = interior_pulse(rng, 6, 2.0);
    seq.segments[2].rabi = 0.0;
    seq.segments[2].detuning = 0.0;
    const Eigen::VectorXd g = gradient(seq, problem, config);
    // Only the Ω-direction of the dark segment is probed here; Ω < 0 is not
    // physical but the cost is analytic through zero.
    const double h = 1e-5;
    Eigen::VectorXd up = pack(seq), down = up;
    up[2] += h;
    down[2] -= h;
    const double fd = (total_cost(unpack(up), problem, config) - total_cost(unpack(down), problem, config)) / (2 * h);
    CHECK(std::abs(fd - g[2]) <= 1e-5 * std::max(1.0, std::abs(fd)));
}

TEST_CASE("pack and unpack are inverse") {
    Rng rng(7);
    const auto seq = interior_pulse(rng, 5, 1.0);
    const auto p = pack(seq);
    CHECK(p[0] == seq.segments[0].rabi);
    CHECK(p[5] == seq.segments[0].detuning);
    CHECK(p[10] == seq.segments[0].dt);
    CHECK(pack(unpack(p)) == p);
    CHECK_THROWS(unpack(Eigen::VectorXd::Zero(4)));
}

TEST_CASE("config validation and JSON") {
    GrapeConfig c;
    CHECK_NOTHROW(validate(c));
    c.alpha = 0.5;
    CHECK_THROWS(validate(c));
    c = {};
    c.n_restarts = 0;
    CHECK_THROWS(validate(c));
    const auto read = grape_config_from_json(nlohmann::json{{"t_max", 3.0}, {"optimizer", "gradient-descent"}});
    CHECK(read.t_max == 3.0);
    CHECK(read.optimizer == OptimizerKind::gradient_descent);
    CHECK(read.m_segments == 30);
    CHECK(grape_config_from_json(to_json(read)).t_max == 3.0);
    CHECK_THROWS(grape_config_from_json(nlohmann::json{{"init_scheme", "zeros"}}));
}

TEST_CASE("the initial state is a zero-cost fixed point") {
    const Fixture fx(9, 7.0);
    const auto problem = make_control_problem(fx.ops, fx.basis, default_initial(fx.basis));

    // No drive: the product ground state only picks up a phase.
    PulseSequence dark;
    for (int k = 0; k < 30; ++k) dark.segments.push_back({0.2, 0.0, 7.0 - 0.5 * k});
    CHECK(infidelity(dark, problem) < 1e-12);
    CHECK(gradient_phys(dark, problem).cwiseAbs().maxCoeff() < 1e-8);

    // From random starts the penalties compete with C_phys, so only ask for a
    // clear descent in a bounded number of iterations.
    GrapeConfig config;
    config.n_restarts = 2;
    config.max_iters = 300;
    const auto result = optimize(problem, config, 11);
    CHECK(result.best_infidelity < 1e-2);
}

TEST_CASE("multi-start optimisation on a reachable target") {
    const Fixture prep(9, 7.0);
    const Fixture gen(9, 10.0);
    Rng rng(8);
    GrapeConfig config;
    config.n_restarts = 3;
    config.max_iters = 60;
    config.t_max = 3.0;
    const auto target = evolve(default_initial(gen.basis), sample_random_pulses(rng, {12.0, 20.0, 30, 3.0}), gen.ops);
    const auto problem = make_control_problem(prep.ops, prep.basis, target);
    const auto a = optimize(problem, config, 5, {42, 0.5, 3.0});
    CHECK(a.restarts.size() == 3);
    CHECK(a.best_restart >= 0);
    for (const auto& r : a.restarts) CHECK(a.best_infidelity <= r.infidelity);
    for (const auto& s : a.best_sequence.segments) {
        CHECK(s.rabi >= 0.0);
        CHECK(s.rabi <= config.omega_max + 1e-9);
        CHECK(std::abs(s.detuning) <= config.delta_max + 1e-9);
        CHECK(s.dt > 0.0);
    }
    CHECK(a.t_opt == doctest::Approx(a.best_sequence.total_time()));
    CHECK(a.best_infidelity == doctest::Approx(infidelity(a.best_sequence, problem)).epsilon(1e-12));
    CHECK(a.best_infidelity < 0.9);  // random pulses sit near 1

    // Same seed, more workers: identical result.
    config.workers = 3;
    const auto b = optimize(problem, config, 5, {42, 0.5, 3.0});
    CHECK(b.best_infidelity == a.best_infidelity);
    CHECK(pack(b.best_sequence) == pack(a.best_sequence));

    const auto doc = to_json(a);
    CHECK(doc["target"]["target_id"] == 42);
    CHECK(doc["best_sequence"]["segments"].size() == 30);
    CHECK(doc["restarts"].size() == 3);
}

TEST_CASE("stratified selection") {
    std::vector<TargetCandidate> pool;
    for (int i = 0; i < 100; ++i) pool.push_back({(i + 0.5) / 100.0, i % 2 ? 3.0 : 7.0});
    const auto sel = stratified_targets(pool, 10, 4);
    CHECK(sel.selected.size() == 40);
    for (int c : sel.per_bin) CHECK(c == 4);
    CHECK(sel.empty_bins.empty());
    // Round-robin across generation times inside a bin.
    CHECK(pool[sel.selected[0]].generation_t_final != pool[sel.selected[1]].generation_t_final);

    std::vector<TargetCandidate> clump(20, {0.3, 3.0});
    clump.push_back({0.9, 3.0});
    const auto s2 = stratified_targets(clump, 5, 100);
    CHECK(s2.per_bin.front() == 20);
    CHECK(s2.per_bin.back() == 1);
    CHECK(s2.empty_bins == std::vector<int>{1, 2, 3});

    const auto s3 = stratified_targets(std::vector<TargetCandidate>(5, {0.4, 7.0}), 3, 2);
    CHECK(s3.selected.size() == 2);
    CHECK(s3.empty_bins.size() == 2);
}

TEST_CASE("success curve") {
    std::vector<StudyPoint> zeros;
    for (int i = 0; i < 20; ++i) zeros.push_back({i / 20.0, 0.0});
    for (const auto& b : success_curve(zeros, 1e-2, 0.1)) CHECK(b.probability == 1.0);
    std::vector<StudyPoint> pts{{0.05, 1e-3}, {0.06, 0.5}, {0.25, 1e-4}};
    const auto bins = success_curve(pts, 1e-2, 0.1);
    REQUIRE(bins.size() == 2);
    CHECK(bins[0].probability == 0.5);
    CHECK(bins[0].count == 2);
    CHECK(bins[1].lo == doctest::Approx(0.2));
    CHECK(bins[1].median == 1e-4);
    for (const auto& b : success_curve(pts, 0.0, 0.1)) CHECK(b.probability == 0.0);
    CHECK_THROWS(success_curve({}, 1e-2, 0.1));
}
