#pragma once

#include <Eigen/Dense>

#include "rydpulse/geometry.hpp"
#include "rydpulse/sector.hpp"

namespace rydpulse {

// rad·µs⁻¹·µm⁶. The default C6 puts the blockade crossover (C6/32)^{1/6}
// near 7.44 µm for the default drive bounds.
inline constexpr double kDefaultC6 = 5'420'503.0;

struct PhysicalParams {
    double c6 = kDefaultC6;
    RingGeometry geometry;

    // V(d) = C6 / d^6, the nearest-neighbour interaction in rad/µs.
    double nearest_neighbor_interaction() const;
};

PhysicalParams make_params(int n_atoms, double spacing, double c6 = kDefaultC6);

struct DriveAmplitudes {
    double rabi = 0.0;      // Ω ≥ 0, rad/µs
    double detuning = 0.0;  // Δ, rad/µs
};

// Collective operators restricted to the trivial sector. H0 and N are
// diagonal in the orbit basis; Jx is real symmetric.
struct SectorOperators {
    Eigen::VectorXd h0_diag;
    Eigen::VectorXd n_diag;
    Eigen::MatrixXd jx;

    Eigen::Index dim() const { return h0_diag.size(); }
};

// V(d) Σ_{i<j} (r_ij/d)^{-6} n_i n_j, evaluated as Σ C6 / r_ij^6.
double interaction_energy(Bitstring bits, const PhysicalParams& params);

SectorOperators build_sector_operators(const SectorBasis& basis, const PhysicalParams& params);

// H = H0 + Ω Jx − Δ N in the sector basis.
Eigen::MatrixXd assemble(const DriveAmplitudes& drive, const SectorOperators& ops);

// ⟨n_0 n_1⟩ for a full-basis state.
double nn_correlation(const StateVector& state, const RingGeometry& geometry);
// ⟨n_i n_j⟩ for arbitrary sites.
double pair_correlation(const StateVector& state, int site_i, int site_j);
// ⟨N⟩ / N.
double mean_excitation(const StateVector& state);

}  // namespace rydpulse
