#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rydpulse/rng.hpp"

namespace rydpulse {

using Bitstring = std::uint32_t;  // site i <-> bit i

inline constexpr int kMaxEnumeratedAtoms = 20;

// Action of the dihedral group D_N on site labels and on bitstrings.
// Elements are indexed 0..2N-1: g < N is rotation by g, g >= N is the
// reflection i -> (g - N - i) mod N.
struct DihedralGroup {
    int n_atoms;

    int order() const { return 2 * n_atoms; }
    int map_site(int element, int site) const;
    Bitstring map_bits(int element, Bitstring bits) const;
};

// Trivial-irrep sector of D_N: one basis vector per orbit, normalised as
// |o> = |o|^{-1/2} sum_{s in o} |s>.
struct SectorBasis {
    int n_atoms = 0;
    std::vector<Bitstring> representatives;  // ascending; each is its orbit's minimum
    std::vector<int> orbit_sizes;
    std::vector<std::int32_t> index_of;      // 2^N entries, full bitstring -> orbit

    int dim() const { return static_cast<int>(representatives.size()); }
    std::size_t full_dim() const { return std::size_t{1} << n_atoms; }
};

// Orbit enumeration over all 2^N bitstrings. Requires 3 <= n_atoms <= 20.
SectorBasis dihedral_orbits(int n_atoms);

// Lexicographically (numerically) smallest image of `bits` under D_N.
Bitstring canonical_representative(Bitstring bits, int n_atoms);

nlohmann::json to_json(const SectorBasis& basis);
// Rebuilds index_of from representatives; throws if the document is inconsistent.
SectorBasis sector_basis_from_json(const nlohmann::json& doc);
std::string sector_cache_filename(int n_atoms);

enum class BasisTag { sector, full };

struct StateVector {
    Eigen::VectorXcd amplitudes;
    BasisTag basis = BasisTag::sector;
    int n_atoms = 0;

    double norm() const { return amplitudes.norm(); }
};

StateVector embed(const StateVector& state, const SectorBasis& basis);
// Not renormalised: the norm of the result is the weight of the symmetric component.
StateVector project(const StateVector& state, const SectorBasis& basis);

// Complex Gaussian amplitudes with Re, Im ~ N(0, 1/2), then normalised.
StateVector haar_sector(Rng& rng, const SectorBasis& basis);
// Same construction over the full 2^N space (no symmetry constraint).
StateVector haar_full(Rng& rng, int n_atoms);

nlohmann::json to_json(const StateVector& state);
StateVector state_from_json(const nlohmann::json& doc);

}  // namespace rydpulse
