#include "rydpulse/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rydpulse {

std::vector<int> Bipartition::complement() const {
    std::vector<int> out;
    for (int i = 0; i < n_atoms; ++i) {
        if (!std::binary_search(sites.begin(), sites.end(), i)) out.push_back(i);
    }
    return out;
}

Bitstring Bipartition::mask() const {
    Bitstring m = 0;
    for (int s : sites) m |= Bitstring{1} << s;
    return m;
}

std::string Bipartition::label() const {
    std::string out;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(sites[i]);
    }
    return out;
}

Bipartition make_bipartition(int n_atoms, std::vector<int> sites) {
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    if (sites.empty() || static_cast<int>(sites.size()) >= n_atoms) {
        throw std::invalid_argument("bipartition: subsystem A must be a non-empty proper subset");
    }
    if (sites.front() < 0 || sites.back() >= n_atoms) {
        throw std::invalid_argument("bipartition: site index out of range");
    }
    return {n_atoms, std::move(sites)};
}

Bipartition contiguous_half(int n_atoms) {
    std::vector<int> sites(n_atoms / 2);
    for (int i = 0; i < n_atoms / 2; ++i) sites[i] = i;
    return make_bipartition(n_atoms, sites);
}

Bipartition parse_bipartition(int n_atoms, const std::string& text) {
    std::vector<int> sites;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            sites.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("bipartition: cannot parse site list '" + text + "'");
        }
    }
    return make_bipartition(n_atoms, sites);
}

double entropy_max(int n_atoms, SmaxConvention convention) {
    const double sites = convention == SmaxConvention::half_n ? 0.5 * n_atoms : n_atoms / 2;
    return sites * std::numbers::ln2;
}

SmaxConvention parse_smax_convention(const std::string& name) {
    if (name == "half_n") return SmaxConvention::half_n;
    if (name == "floor_half_n") return SmaxConvention::floor_half_n;
    throw std::invalid_argument("unknown smax_convention '" + name + "' (expected half_n or floor_half_n)");
}

std::string to_string(SmaxConvention convention) {
    return convention == SmaxConvention::half_n ? "half_n" : "floor_half_n";
}

Eigen::MatrixXcd coefficient_matrix(const StateVector& state, const std::vector<int>& row_sites,
                                    const std::vector<int>& col_sites) {
    if (state.basis != BasisTag::full) throw std::invalid_argument("coefficient_matrix: expected a full-basis state");
    const Eigen::Index rows = Eigen::Index{1} << row_sites.size();
    const Eigen::Index cols = Eigen::Index{1} << col_sites.size();
    Eigen::MatrixXcd c(rows, cols);
    for (Eigen::Index s = 0; s < state.amplitudes.size(); ++s) {
        Eigen::Index r = 0, q = 0;
        for (std::size_t j = 0; j < row_sites.size(); ++j) r |= ((s >> row_sites[j]) & 1) << j;
        for (std::size_t j = 0; j < col_sites.size(); ++j) q |= ((s >> col_sites[j]) & 1) << j;
        c(r, q) = state.amplitudes[s];
    }
    return c;
}

EntanglementData schmidt_decompose(const StateVector& state, const Bipartition& part,
                                   SmaxConvention convention) {
    if (state.n_atoms != part.n_atoms) throw std::invalid_argument("schmidt_decompose: N mismatch");
    const double norm = state.norm();
    if (std::abs(norm - 1.0) > 1e-8) {
        throw std::invalid_argument("schmidt_decompose: state is not normalised (norm " + std::to_string(norm) + ")");
    }
    const Eigen::MatrixXcd c = coefficient_matrix(state, part.sites, part.complement());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(c);
    const Eigen::VectorXd sv = svd.singularValues();  // descending

    EntanglementData data;
    data.schmidt_sq.resize(sv.size());
    double total = 0.0;
    for (Eigen::Index n = 0; n < sv.size(); ++n) {
        data.schmidt_sq[n] = sv[n] * sv[n];
        total += data.schmidt_sq[n];
    }
    for (double& l : data.schmidt_sq) l /= total;
    for (double l : data.schmidt_sq) {
        if (l > 0.0) data.entropy -= l * std::log(l);
        if (l >= kSchmidtFloor) data.log_spectrum.push_back(-std::log(l));
    }
    data.normalized_entropy = data.entropy / entropy_max(state.n_atoms, convention);
    return data;
}

std::string to_string(BipartitionSymmetry kind) {
    switch (kind) {
        case BipartitionSymmetry::exchange: return "exchange-symmetry";
        case BipartitionSymmetry::internal: return "internal-symmetry";
        case BipartitionSymmetry::none: break;
    }
    return "no-symmetry";
}

namespace {

bool is_involution(const DihedralGroup& group, int g) {
    for (int i = 0; i < group.n_atoms; ++i) {
        if (group.map_site(g, group.map_site(g, i)) != i) return false;
    }
    return true;
}

}  // namespace

SymmetryClass classify_bipartition(const Bipartition& part) {
    const DihedralGroup group{part.n_atoms};
    const Bitstring a = part.mask();
    const Bitstring full = (Bitstring{1} << part.n_atoms) - 1;
    const Bitstring b = full & ~a;
    SymmetryClass out;
    // Element 0 is the identity rotation.
    for (int g = 0; g < group.order(); ++g) {
        const Bitstring image = group.map_bits(g, a);
        if (image == b) {
            // Prefer an involution: then C = Cᵀ holds with the aligned column order.
            if (!out.exchange || (!is_involution(group, *out.exchange_element) && is_involution(group, g))) {
                out.exchange_element = g;
            }
            out.exchange = true;
        }
        if (g != 0 && image == a) out.internal = true;
    }
    return out;
}

namespace {

// Calls visit(sites) on each k-subset of {0..n-1} in lexicographic order
// until it returns true.
template <class Visit>
bool for_each_subset(int n, int k, Visit visit) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        if (visit(idx)) return true;
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return false;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

Bipartition find_asymmetric_bipartition(int n_atoms) {
    if (n_atoms < 5) throw std::invalid_argument("find_asymmetric_bipartition: requires N >= 5");
    std::optional<Bipartition> found;
    for_each_subset(n_atoms, n_atoms / 2, [&](const std::vector<int>& sites) {
        auto part = make_bipartition(n_atoms, sites);
        if (classify_bipartition(part).kind() == BipartitionSymmetry::none) {
            found = std::move(part);
            return true;
        }
        return false;
    });
    if (!found) throw std::logic_error("no symmetry-free bipartition exists for N=" + std::to_string(n_atoms));
    return *found;
}

std::optional<Bipartition> find_internal_only_bipartition(int n_atoms) {
    std::optional<Bipartition> found;
    for_each_subset(n_atoms, n_atoms / 2, [&](const std::vector<int>& sites) {
        auto part = make_bipartition(n_atoms, sites);
        const auto cls = classify_bipartition(part);
        if (cls.internal && !cls.exchange) {
            found = std::move(part);
            return true;
        }
        return false;
    });
    return found;
}

std::optional<Bipartition> find_exchange_only_bipartition(int n_atoms) {
    std::optional<Bipartition> found;
    for_each_subset(n_atoms, n_atoms / 2, [&](const std::vector<int>& sites) {
        auto part = make_bipartition(n_atoms, sites);
        const auto cls = classify_bipartition(part);
        if (cls.exchange && !cls.internal) {
            found = std::move(part);
            return true;
        }
        return false;
    });
    return found;
}

double symmetric_coefficient_check(const StateVector& state, const Bipartition& part) {
    const auto cls = classify_bipartition(part);
    if (!cls.exchange) {
        throw std::invalid_argument("symmetric_coefficient_check: bipartition " + part.label() +
                                    " is not exchange-symmetric");
    }
    const DihedralGroup group{part.n_atoms};
    std::vector<int> col_sites;
    for (int a : part.sites) col_sites.push_back(group.map_site(*cls.exchange_element, a));
    const Eigen::MatrixXcd c = coefficient_matrix(state, part.sites, col_sites);
    return (c - c.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace rydpulse
