#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydpulse/sector.hpp"

namespace rydpulse {

struct Bipartition {
    int n_atoms = 0;
    std::vector<int> sites;  // subsystem A, ascending

    std::vector<int> complement() const;
    Bitstring mask() const;
    std::string label() const;  // e.g. "0,1,2,4"
};

Bipartition make_bipartition(int n_atoms, std::vector<int> sites);
Bipartition contiguous_half(int n_atoms);
Bipartition parse_bipartition(int n_atoms, const std::string& sites);

// S_max = N ln2 / 2 (half_n) or floor(N/2) ln2 (floor_half_n).
enum class SmaxConvention { half_n, floor_half_n };

double entropy_max(int n_atoms, SmaxConvention convention);
SmaxConvention parse_smax_convention(const std::string& name);
std::string to_string(SmaxConvention convention);

inline constexpr double kSchmidtFloor = 1e-14;

struct EntanglementData {
    std::vector<double> schmidt_sq;    // descending, sums to 1
    double entropy = 0.0;              // nats
    std::vector<double> log_spectrum;  // -log λ², ascending; λ² < kSchmidtFloor dropped
    double normalized_entropy = 0.0;
};

// Coefficient matrix C[row, col] with the row index packing `row_sites`
// (site row_sites[j] -> bit j) and the column index packing `col_sites`.
Eigen::MatrixXcd coefficient_matrix(const StateVector& state, const std::vector<int>& row_sites,
                                    const std::vector<int>& col_sites);

// Throws std::invalid_argument if the state norm deviates from 1 by more than 1e-8.
EntanglementData schmidt_decompose(const StateVector& state, const Bipartition& part,
                                   SmaxConvention convention = SmaxConvention::half_n);

enum class BipartitionSymmetry { none, exchange, internal };

struct SymmetryClass {
    bool exchange = false;  // some g in D_N maps A onto B
    bool internal = false;  // some g != e maps A onto itself
    std::optional<int> exchange_element;

    BipartitionSymmetry kind() const {
        if (exchange) return BipartitionSymmetry::exchange;
        if (internal) return BipartitionSymmetry::internal;
        return BipartitionSymmetry::none;
    }
};

std::string to_string(BipartitionSymmetry kind);

SymmetryClass classify_bipartition(const Bipartition& part);

// First floor(N/2)-subset in lexicographic order with no induced symmetry.
Bipartition find_asymmetric_bipartition(int n_atoms);
// First floor(N/2)-subset in lexicographic order with an internal symmetry
// but no exchange symmetry, if one exists.
std::optional<Bipartition> find_internal_only_bipartition(int n_atoms);
// First floor(N/2)-subset with an exchange symmetry but no internal one. The
// contiguous half does not qualify: the reflection about its centre maps it
// onto itself.
std::optional<Bipartition> find_exchange_only_bipartition(int n_atoms);

// max |C - Cᵀ| with columns ordered as the images g(a_1), ..., g(a_k) of A
// under the exchanging group element. Requires an exchange-symmetric bipartition.
double symmetric_coefficient_check(const StateVector& state, const Bipartition& part);

}  // namespace rydpulse
