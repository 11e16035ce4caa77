#include "rydpulse/ensemble.hpp"

#include <stdexcept>
#include <string>

namespace rydpulse {

EnsembleContext::EnsembleContext(EnsembleSettings settings)
    : settings_(std::move(settings)), basis_(dihedral_orbits(settings_.n_atoms)) {
    if (settings_.bipartition.n_atoms == 0) settings_.bipartition = find_asymmetric_bipartition(settings_.n_atoms);
    if (settings_.bipartition.n_atoms != settings_.n_atoms) {
        throw std::invalid_argument("ensemble: bipartition is for N=" + std::to_string(settings_.bipartition.n_atoms));
    }
    validate(PulseConstraints{settings_.omega_max, settings_.delta_max, settings_.m_segments, 1.0});
}

void EnsembleContext::prepare(double spacing) {
    if (ops_.count(spacing)) return;
    ops_.emplace(spacing, build_sector_operators(basis_, make_params(settings_.n_atoms, spacing, settings_.c6)));
}

const SectorOperators& EnsembleContext::operators(double spacing) const {
    const auto it = ops_.find(spacing);
    if (it == ops_.end()) throw std::logic_error("ensemble: spacing " + std::to_string(spacing) + " was not prepared");
    return it->second;
}

EnsembleRecord EnsembleContext::analyse(const StateVector& sector_state, std::int64_t sample_id, double spacing,
                                        double t_final) const {
    const StateVector full = embed(sector_state, basis_);
    const EntanglementData ent = schmidt_decompose(full, settings_.bipartition, settings_.smax);
    const GapRatios gaps = gap_ratios(ent, settings_.keep_central);
    EnsembleRecord r;
    r.sample_id = sample_id;
    r.spacing = spacing;
    r.t_final = t_final;
    r.entropy = ent.entropy;
    r.normalized_entropy = ent.normalized_entropy;
    r.ratios = gaps.ratios;
    r.degenerate = gaps.degenerate;
    r.nn_correlation = pair_correlation(full, 0, 1);
    r.mean_excitation = mean_excitation(full);
    r.omegas = bitstring_omegas(full);
    return r;
}

StateVector EnsembleContext::random_pulse_state(std::uint64_t master_seed, std::uint64_t cell, std::int64_t sample_id,
                                                double spacing, double t_final) const {
    Rng rng = make_stream(master_seed, {static_cast<std::uint64_t>(StreamTag::pulse), cell,
                                        static_cast<std::uint64_t>(sample_id)});
    const PulseConstraints c{settings_.omega_max, settings_.delta_max, settings_.m_segments, t_final};
    return evolve(default_initial(basis_), sample_random_pulses(rng, c), operators(spacing));
}

EnsembleRecord EnsembleContext::random_pulse_sample(std::uint64_t master_seed, std::uint64_t cell,
                                                    std::int64_t sample_id, double spacing, double t_final) const {
    return analyse(random_pulse_state(master_seed, cell, sample_id, spacing, t_final), sample_id, spacing, t_final);
}

EnsembleRecord EnsembleContext::haar_sector_sample(std::uint64_t master_seed, std::int64_t sample_id) const {
    Rng rng = make_stream(master_seed, {static_cast<std::uint64_t>(StreamTag::haar_sector),
                                        static_cast<std::uint64_t>(sample_id)});
    return analyse(haar_sector(rng, basis_), sample_id, 0.0, 0.0);
}

void bin_omegas(EnsembleRecord& record, const Histogram& layout) {
    Histogram h = layout;
    std::fill(h.counts.begin(), h.counts.end(), 0);
    h.overflow = 0;
    h.add(record.omegas);
    record.omega_counts.assign(h.counts.begin(), h.counts.end());
    record.omega_counts.push_back(h.overflow);
}

EnsembleAccumulator::EnsembleAccumulator(int entropy_bins, int ratio_bins, int omega_bins, double omega_hi)
    : entropy(Histogram::uniform(0.0, 1.0, entropy_bins)),
      ratios(Histogram::uniform(0.0, 1.0, ratio_bins)),
      omegas(Histogram::uniform(0.0, omega_hi, omega_bins)) {}

void EnsembleAccumulator::add(const EnsembleRecord& r) {
    entropy.add(r.normalized_entropy);
    ratios.add(r.ratios);
    pooled_ratios.insert(pooled_ratios.end(), r.ratios.begin(), r.ratios.end());
    if (!r.omegas.empty()) {
        omegas.add(r.omegas);
    } else {
        if (r.omega_counts.size() != omegas.counts.size() + 1) {
            throw std::invalid_argument("ensemble: record ω counts do not match the histogram layout");
        }
        for (std::size_t i = 0; i < omegas.counts.size(); ++i) omegas.counts[i] += r.omega_counts[i];
        omegas.overflow += r.omega_counts.back();
    }
    normalized_entropy.push_back(r.normalized_entropy);
    nn_correlation.push_back(r.nn_correlation);
    mean_excitation.push_back(r.mean_excitation);
    degenerate += r.degenerate;
}

CellSummary summarize_cell(const EnsembleAccumulator& acc, const EnsembleAccumulator* reference) {
    CellSummary s;
    s.samples = acc.count();
    if (s.samples == 0) return s;
    s.entropy = summarize(acc.normalized_entropy);
    s.mean_entropy = mean(acc.normalized_entropy);
    s.n_ratios = acc.pooled_ratios.size();
    s.mean_ratio = acc.pooled_ratios.empty() ? 0.0 : mean(acc.pooled_ratios);
    s.nn_correlation = summarize(acc.nn_correlation);
    s.mean_nn_correlation = mean(acc.nn_correlation);
    s.mean_excitation = mean(acc.mean_excitation);
    s.js_omega_porter_thomas = js_divergence(acc.omegas.masses(true), porter_thomas_masses(acc.omegas));
    if (reference && reference->count() > 0) {
        s.js_entropy_reference = js_divergence(acc.entropy, reference->entropy);
        s.js_ratio_reference = js_divergence(acc.ratios, reference->ratios);
    }
    return s;
}

nlohmann::json to_json(const EnsembleRecord& r, bool with_omegas) {
    nlohmann::json doc = {{"sample_id", r.sample_id},
                          {"spacing", r.spacing},
                          {"t_final", r.t_final},
                          {"entropy", r.entropy},
                          {"normalized_entropy", r.normalized_entropy},
                          {"gap_ratios", r.ratios},
                          {"degenerate_gaps", r.degenerate},
                          {"nn_correlation", r.nn_correlation},
                          {"mean_excitation", r.mean_excitation},
                          {"omega_counts", r.omega_counts}};
    if (with_omegas) doc["omegas"] = r.omegas;
    return doc;
}

EnsembleRecord ensemble_record_from_json(const nlohmann::json& doc) {
    EnsembleRecord r;
    r.sample_id = doc.at("sample_id").get<std::int64_t>();
    r.spacing = doc.at("spacing").get<double>();
    r.t_final = doc.at("t_final").get<double>();
    r.entropy = doc.at("entropy").get<double>();
    r.normalized_entropy = doc.at("normalized_entropy").get<double>();
    r.ratios = doc.at("gap_ratios").get<std::vector<double>>();
    r.degenerate = doc.at("degenerate_gaps").get<int>();
    r.nn_correlation = doc.at("nn_correlation").get<double>();
    r.mean_excitation = doc.at("mean_excitation").get<double>();
    r.omega_counts = doc.at("omega_counts").get<std::vector<std::uint64_t>>();
    return r;
}

}  // namespace rydpulse
