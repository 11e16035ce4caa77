#include "rydpulse/hamiltonian.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rydpulse {

double PhysicalParams::nearest_neighbor_interaction() const {
    return c6 / std::pow(geometry.spacing, 6);
}

PhysicalParams make_params(int n_atoms, double spacing, double c6) {
    if (!(c6 > 0.0)) throw std::invalid_argument("make_params: c6 must be positive");
    return PhysicalParams{c6, build_ring(n_atoms, spacing)};
}

double interaction_energy(Bitstring bits, const PhysicalParams& params) {
    const auto& r = params.geometry.distances;
    const int n = params.geometry.n_atoms;
    double energy = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!((bits >> i) & 1U)) continue;
        for (int j = i + 1; j < n; ++j) {
            if ((bits >> j) & 1U) energy += params.c6 / std::pow(r(i, j), 6);
        }
    }
    return energy;
}

SectorOperators build_sector_operators(const SectorBasis& basis, const PhysicalParams& params) {
    if (basis.n_atoms != params.geometry.n_atoms) {
        throw std::invalid_argument("build_sector_operators: basis has N=" + std::to_string(basis.n_atoms) +
                                    " but geometry has N=" + std::to_string(params.geometry.n_atoms));
    }
    const int dim = basis.dim();
    SectorOperators ops;
    ops.h0_diag.resize(dim);
    ops.n_diag.resize(dim);
    ops.jx = Eigen::MatrixXd::Zero(dim, dim);

    for (int o = 0; o < dim; ++o) {
        const Bitstring rep = basis.representatives[o];
        ops.h0_diag[o] = interaction_energy(rep, params);
        ops.n_diag[o] = std::popcount(rep);
        // Every element of orbit o has the same flip counts into each target
        // orbit, so counting from the representative suffices:
        // <o'|Jx|o> = (1/2) sqrt(|o| / |o'|) #{i : flip_i(rep) in o'}.
        for (int i = 0; i < basis.n_atoms; ++i) {
            const auto target = basis.index_of[rep ^ (Bitstring{1} << i)];
            ops.jx(target, o) += 0.5 * std::sqrt(static_cast<double>(basis.orbit_sizes[o]) /
                                                 basis.orbit_sizes[target]);
        }
    }
    // Rounding in the two counting directions can differ in the last ulp.
    const Eigen::MatrixXd upper = ops.jx.triangularView<Eigen::StrictlyUpper>();
    ops.jx = upper + upper.transpose();
    return ops;
}

Eigen::MatrixXd assemble(const DriveAmplitudes& drive, const SectorOperators& ops) {
    Eigen::MatrixXd h = drive.rabi * ops.jx;
    h.diagonal() += ops.h0_diag - drive.detuning * ops.n_diag;
    return h;
}

namespace {

void require_full(const StateVector& state, const char* what) {
    if (state.basis != BasisTag::full ||
        state.amplitudes.size() != (Eigen::Index{1} << state.n_atoms)) {
        throw std::invalid_argument(std::string(what) + ": expected a full-basis state");
    }
}

}  // namespace

double pair_correlation(const StateVector& state, int site_i, int site_j) {
    require_full(state, "pair_correlation");
    const Bitstring mask = (Bitstring{1} << site_i) | (Bitstring{1} << site_j);
    double total = 0.0;
    for (Eigen::Index s = 0; s < state.amplitudes.size(); ++s) {
        if ((static_cast<Bitstring>(s) & mask) == mask) total += std::norm(state.amplitudes[s]);
    }
    return total;
}

double nn_correlation(const StateVector& state, const RingGeometry& geometry) {
    if (geometry.n_atoms != state.n_atoms) throw std::invalid_argument("nn_correlation: N mismatch");
    return pair_correlation(state, 0, 1);
}

double mean_excitation(const StateVector& state) {
    require_full(state, "mean_excitation");
    double total = 0.0;
    for (Eigen::Index s = 0; s < state.amplitudes.size(); ++s) {
        total += std::norm(state.amplitudes[s]) * std::popcount(static_cast<Bitstring>(s));
    }
    return total / state.n_atoms;
}

}  // namespace rydpulse
