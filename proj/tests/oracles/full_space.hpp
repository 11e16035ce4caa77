#pragma once

// Independent reference routes used only by the test suites: dense 2^N
// Hamiltonians built site by site, brute-force group orbits, and closed forms
// that do not share code with the library paths they check.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

namespace oracle {

// Regular N-gon coordinates with nearest-neighbour spacing d.
inline Eigen::MatrixXd polygon_distances(int n, double d) {
    const double radius = d / (2.0 * std::sin(std::numbers::pi / n));
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double ai = 2.0 * std::numbers::pi * i / n, aj = 2.0 * std::numbers::pi * j / n;
            r(i, j) = radius * std::hypot(std::cos(ai) - std::cos(aj), std::sin(ai) - std::sin(aj));
        }
    }
    return r;
}

// Image of a bitstring under the permutation site i -> perm[i].
inline std::uint32_t permute(std::uint32_t bits, const std::vector<int>& perm) {
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if ((bits >> i) & 1U) out |= 1U << perm[i];
    }
    return out;
}

inline std::vector<std::vector<int>> dihedral_permutations(int n) {
    std::vector<std::vector<int>> perms;
    for (int r = 0; r < n; ++r) {
        std::vector<int> rot(n), ref(n);
        for (int i = 0; i < n; ++i) {
            rot[i] = (i + r) % n;
            ref[i] = ((r - i) % n + n) % n;
        }
        perms.push_back(rot);
        perms.push_back(ref);
    }
    return perms;
}

// Orbits by closure under the generators, collected as sets.
inline std::vector<std::set<std::uint32_t>> brute_force_orbits(int n) {
    const auto perms = dihedral_permutations(n);
    std::vector<bool> seen(std::size_t{1} << n, false);
    std::vector<std::set<std::uint32_t>> orbits;
    for (std::uint32_t s = 0; s < (1U << n); ++s) {
        if (seen[s]) continue;
        std::set<std::uint32_t> orbit;
        for (const auto& p : perms) orbit.insert(permute(s, p));
        for (auto t : orbit) seen[t] = true;
        orbits.push_back(orbit);
    }
    return orbits;
}

// Burnside: average number of fixed bitstrings over D_N.
inline int burnside_count(int n) {
    long total = 0;
    for (const auto& p : dihedral_permutations(n)) {
        // Fixed points = 2^(number of cycles of the permutation).
        std::vector<bool> visited(n, false);
        int cycles = 0;
        for (int i = 0; i < n; ++i) {
            if (visited[i]) continue;
            ++cycles;
            for (int j = i; !visited[j]; j = p[j]) visited[j] = true;
        }
        total += 1L << cycles;
    }
    return static_cast<int>(total / (2 * n));
}

// Dense H = Σ C6/r^6 n_i n_j + Ω Σ σx/2 − Δ Σ n_i in the full 2^N basis.
inline Eigen::MatrixXd full_hamiltonian(int n, double spacing, double c6, double rabi, double detuning) {
    const auto r = polygon_distances(n, spacing);
    const int dim = 1 << n;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) {
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!((s >> i) & 1)) continue;
            diag -= detuning;
            for (int j = i + 1; j < n; ++j) {
                if ((s >> j) & 1) diag += c6 / std::pow(r(i, j), 6);
            }
        }
        h(s, s) = diag;
        for (int i = 0; i < n; ++i) h(s ^ (1 << i), s) += 0.5 * rabi;
    }
    return h;
}

inline Eigen::VectorXcd full_expm_apply(const Eigen::MatrixXd& h, double dt, const Eigen::VectorXcd& psi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    Eigen::VectorXcd c = es.eigenvectors().transpose() * psi;
    for (Eigen::Index a = 0; a < c.size(); ++a) c[a] *= std::exp(std::complex<double>(0.0, -dt * es.eigenvalues()[a]));
    return es.eigenvectors() * c;
}

struct Segment {
    double dt, rabi, detuning;
};

inline Eigen::VectorXcd full_evolve(int n, double spacing, double c6, const std::vector<Segment>& segments) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(1 << n);
    psi[0] = 1.0;
    for (const auto& s : segments) psi = full_expm_apply(full_hamiltonian(n, spacing, c6, s.rabi, s.detuning), s.dt, psi);
    return psi;
}

// Page's mean entanglement entropy for a random pure state in C^m ⊗ C^n, m <= n.
inline double page_entropy(double m, double n) {
    return boost::math::digamma(m * n + 1.0) - boost::math::digamma(n + 1.0) - (m - 1.0) / (2.0 * n);
}

}  // namespace oracle
