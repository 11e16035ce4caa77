#include "rydpulse/sector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rydpulse {

int DihedralGroup::map_site(int element, int site) const {
    if (element < n_atoms) return (site + element) % n_atoms;
    const int axis = element - n_atoms;
    return ((axis - site) % n_atoms + n_atoms) % n_atoms;
}

Bitstring DihedralGroup::map_bits(int element, Bitstring bits) const {
    Bitstring out = 0;
    for (int i = 0; i < n_atoms; ++i) {
        if ((bits >> i) & 1U) out |= Bitstring{1} << map_site(element, i);
    }
    return out;
}

namespace {

Bitstring rotate(Bitstring bits, int r, int n, Bitstring mask) {
    if (r == 0) return bits;
    return ((bits << r) | (bits >> (n - r))) & mask;
}

Bitstring reverse(Bitstring bits, int n) {
    Bitstring out = 0;
    for (int i = 0; i < n; ++i) {
        if ((bits >> i) & 1U) out |= Bitstring{1} << (n - 1 - i);
    }
    return out;
}

void check_enumerable(int n_atoms) {
    if (n_atoms < 3 || n_atoms > kMaxEnumeratedAtoms) {
        throw std::invalid_argument("dihedral_orbits: n_atoms must lie in [3, " +
                                    std::to_string(kMaxEnumeratedAtoms) + "], got " +
                                    std::to_string(n_atoms));
    }
}

}  // namespace

Bitstring canonical_representative(Bitstring bits, int n_atoms) {
    const Bitstring mask = (Bitstring{1} << n_atoms) - 1;
    const Bitstring mirrored = reverse(bits, n_atoms);
    Bitstring best = bits;
    for (int r = 0; r < n_atoms; ++r) {
        best = std::min(best, rotate(bits, r, n_atoms, mask));
        best = std::min(best, rotate(mirrored, r, n_atoms, mask));
    }
    return best;
}

SectorBasis dihedral_orbits(int n_atoms) {
    check_enumerable(n_atoms);
    SectorBasis basis;
    basis.n_atoms = n_atoms;
    const std::size_t full = std::size_t{1} << n_atoms;

    std::vector<Bitstring> canon(full);
    for (std::size_t s = 0; s < full; ++s) {
        canon[s] = canonical_representative(static_cast<Bitstring>(s), n_atoms);
        if (canon[s] == s) basis.representatives.push_back(static_cast<Bitstring>(s));
    }
    // Representatives were collected in ascending order, so a binary search
    // gives each orbit's index.
    basis.orbit_sizes.assign(basis.representatives.size(), 0);
    basis.index_of.resize(full);
    for (std::size_t s = 0; s < full; ++s) {
        const auto it = std::lower_bound(basis.representatives.begin(),
                                         basis.representatives.end(), canon[s]);
        const auto o = static_cast<std::int32_t>(it - basis.representatives.begin());
        basis.index_of[s] = o;
        ++basis.orbit_sizes[o];
    }
    return basis;
}

nlohmann::json to_json(const SectorBasis& basis) {
    return nlohmann::json{{"n_atoms", basis.n_atoms},
                          {"dim", basis.dim()},
                          {"representatives", basis.representatives},
                          {"orbit_sizes", basis.orbit_sizes}};
}

SectorBasis sector_basis_from_json(const nlohmann::json& doc) {
    const int n = doc.at("n_atoms").get<int>();
    SectorBasis basis = dihedral_orbits(n);
    const auto reps = doc.at("representatives").get<std::vector<Bitstring>>();
    const auto sizes = doc.at("orbit_sizes").get<std::vector<int>>();
    if (reps != basis.representatives || sizes != basis.orbit_sizes) {
        throw std::runtime_error("sector basis document for N=" + std::to_string(n) +
                                 " does not match the canonical orbit enumeration");
    }
    return basis;
}

std::string sector_cache_filename(int n_atoms) {
    return "sector_N" + std::to_string(n_atoms) + ".json";
}

StateVector embed(const StateVector& state, const SectorBasis& basis) {
    if (state.basis != BasisTag::sector || state.amplitudes.size() != basis.dim()) {
        throw std::invalid_argument("embed: expected a sector state of dimension " +
                                    std::to_string(basis.dim()));
    }
    std::vector<double> inv_sqrt(basis.orbit_sizes.size());
    for (std::size_t o = 0; o < inv_sqrt.size(); ++o) inv_sqrt[o] = 1.0 / std::sqrt(basis.orbit_sizes[o]);

    StateVector out;
    out.basis = BasisTag::full;
    out.n_atoms = basis.n_atoms;
    out.amplitudes.resize(static_cast<Eigen::Index>(basis.full_dim()));
    for (std::size_t s = 0; s < basis.full_dim(); ++s) {
        const auto o = basis.index_of[s];
        out.amplitudes[static_cast<Eigen::Index>(s)] = state.amplitudes[o] * inv_sqrt[o];
    }
    return out;
}

StateVector project(const StateVector& state, const SectorBasis& basis) {
    if (state.basis != BasisTag::full ||
        static_cast<std::size_t>(state.amplitudes.size()) != basis.full_dim()) {
        throw std::invalid_argument("project: expected a full-basis state of dimension " +
                                    std::to_string(basis.full_dim()));
    }
    StateVector out;
    out.basis = BasisTag::sector;
    out.n_atoms = basis.n_atoms;
    out.amplitudes = Eigen::VectorXcd::Zero(basis.dim());
    for (std::size_t s = 0; s < basis.full_dim(); ++s) {
        out.amplitudes[basis.index_of[s]] += state.amplitudes[static_cast<Eigen::Index>(s)];
    }
    for (int o = 0; o < basis.dim(); ++o) out.amplitudes[o] /= std::sqrt(basis.orbit_sizes[o]);
    return out;
}

namespace {

Eigen::VectorXcd ginibre_vector(Rng& rng, Eigen::Index dim) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::VectorXcd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        v[i] = {re, im};
    }
    return v / v.norm();
}

}  // namespace

StateVector haar_sector(Rng& rng, const SectorBasis& basis) {
    return {ginibre_vector(rng, basis.dim()), BasisTag::sector, basis.n_atoms};
}

StateVector haar_full(Rng& rng, int n_atoms) {
    return {ginibre_vector(rng, Eigen::Index{1} << n_atoms), BasisTag::full, n_atoms};
}

nlohmann::json to_json(const StateVector& state) {
    std::vector<double> re(state.amplitudes.size()), im(state.amplitudes.size());
    for (Eigen::Index i = 0; i < state.amplitudes.size(); ++i) {
        re[i] = state.amplitudes[i].real();
        im[i] = state.amplitudes[i].imag();
    }
    return nlohmann::json{{"n_atoms", state.n_atoms},
                          {"basis", state.basis == BasisTag::sector ? "sector" : "full"},
                          {"re", re},
                          {"im", im}};
}

StateVector state_from_json(const nlohmann::json& doc) {
    StateVector state;
    state.n_atoms = doc.at("n_atoms").get<int>();
    const auto tag = doc.at("basis").get<std::string>();
    if (tag == "sector") {
        state.basis = BasisTag::sector;
    } else if (tag == "full") {
        state.basis = BasisTag::full;
    } else {
        throw std::invalid_argument("state document: unknown basis '" + tag + "'");
    }
    const auto re = doc.at("re").get<std::vector<double>>();
    const auto im = doc.at("im").get<std::vector<double>>();
    if (re.size() != im.size()) throw std::invalid_argument("state document: re/im length mismatch");
    state.amplitudes.resize(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) state.amplitudes[static_cast<Eigen::Index>(i)] = {re[i], im[i]};
    return state;
}

}  // namespace rydpulse
