#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "rydpulse/entanglement.hpp"
#include "rydpulse/evolution.hpp"
#include "rydpulse/rng.hpp"
#include "rydpulse/statistics.hpp"

namespace rydpulse {

// Stream tags keep the random-pulse, Haar and reference draws of one master
// seed independent of each other.
struct EnsembleSettings {
    int n_atoms = 9;
    double c6 = kDefaultC6;
    int m_segments = 30;
    double omega_max = 12.0;
    double delta_max = 20.0;
    Bipartition bipartition;
    SmaxConvention smax = SmaxConvention::half_n;
    double keep_central = kDefaultKeepCentral;
};

// One evolved (or Haar) state reduced to the quantities every study needs.
struct EnsembleRecord {
    std::int64_t sample_id = 0;
    double spacing = 0.0;  // 0 for Haar draws
    double t_final = 0.0;  // 0 for Haar draws
    double entropy = 0.0;
    double normalized_entropy = 0.0;
    std::vector<double> ratios;
    int degenerate = 0;
    double nn_correlation = 0.0;
    double mean_excitation = 0.0;
    std::vector<double> omegas;  // ω = D p(σ) for all bitstrings; may be dropped after binning
    // ω histogram counts with the overflow count appended; filled by bin_omegas().
    std::vector<std::uint64_t> omega_counts;
};

// Bins record.omegas on `layout` into record.omega_counts.
void bin_omegas(EnsembleRecord& record, const Histogram& layout);

// Shared read-only data: the sector basis and the operators for each spacing.
class EnsembleContext {
public:
    explicit EnsembleContext(EnsembleSettings settings);

    const EnsembleSettings& settings() const { return settings_; }
    const SectorBasis& basis() const { return basis_; }
    // prepare() must have been called for the spacing; throws otherwise.
    const SectorOperators& operators(double spacing) const;
    void prepare(double spacing);

    EnsembleRecord analyse(const StateVector& sector_state, std::int64_t sample_id, double spacing, double t_final) const;

    // Random-pulse sample drawn from stream (seed, pulse, cell, sample_id).
    EnsembleRecord random_pulse_sample(std::uint64_t master_seed, std::uint64_t cell, std::int64_t sample_id,
                                       double spacing, double t_final) const;
    StateVector random_pulse_state(std::uint64_t master_seed, std::uint64_t cell, std::int64_t sample_id,
                                   double spacing, double t_final) const;
    // Haar draw inside the trivial sector, stream (seed, haar_sector, sample_id).
    EnsembleRecord haar_sector_sample(std::uint64_t master_seed, std::int64_t sample_id) const;

private:
    EnsembleSettings settings_;
    SectorBasis basis_;
    std::map<double, SectorOperators> ops_;
};

// Pooled histograms and per-sample scalars of one ensemble cell.
struct EnsembleAccumulator {
    Histogram entropy;   // S̃
    Histogram ratios;    // r̃
    Histogram omegas;    // ω, with overflow
    std::vector<double> normalized_entropy;
    std::vector<double> nn_correlation;
    std::vector<double> mean_excitation;
    std::vector<double> pooled_ratios;
    std::int64_t degenerate = 0;

    EnsembleAccumulator(int entropy_bins, int ratio_bins, int omega_bins, double omega_hi);
    void add(const EnsembleRecord& record);
    std::size_t count() const { return normalized_entropy.size(); }
};

struct CellSummary {
    std::size_t samples = 0;
    Summary entropy;
    double mean_entropy = 0.0;
    double mean_ratio = 0.0;
    std::size_t n_ratios = 0;
    Summary nn_correlation;
    double mean_nn_correlation = 0.0;
    double mean_excitation = 0.0;
    double js_omega_porter_thomas = 0.0;
    std::optional<double> js_entropy_reference;
    std::optional<double> js_ratio_reference;
};

CellSummary summarize_cell(const EnsembleAccumulator& acc, const EnsembleAccumulator* reference = nullptr);

nlohmann::json to_json(const EnsembleRecord& record, bool with_omegas);
// Restores everything except the raw ω list.
EnsembleRecord ensemble_record_from_json(const nlohmann::json& doc);

}  // namespace rydpulse
