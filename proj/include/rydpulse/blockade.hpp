#pragma once

#include <span>

#include "rydpulse/rng.hpp"
#include "rydpulse/statistics.hpp"

namespace rydpulse {

// Distribution of η = Ω / |V - Δ| for Ω ~ U[0, Ω_max], Δ ~ U[-Δ_max, Δ_max],
// with V the nearest-neighbour interaction.
struct EtaModel {
    double v = 0.0;
    double omega_max = 12.0;
    double delta_max = 20.0;

    // Ω_max / (V + Δ_max)
    double eta_minus() const;
    // Ω_max / |V - Δ_max|, +inf when V == Δ_max.
    double eta_plus() const;
    // Case A: V > Δ_max (the detuning can never reach the pair resonance).
    bool interaction_dominated() const { return v > delta_max; }
    // Constant density on [0, η₋].
    double plateau_density() const;
};

EtaModel make_eta_model(double v, double omega_max, double delta_max);
EtaModel eta_model_for_spacing(double spacing, double c6, double omega_max, double delta_max);

double eta_pdf(double eta, const EtaModel& model);
double eta_cdf(double eta, const EtaModel& model);

// d̃ = (C6 / (Ω_max + Δ_max))^{1/6}
double characteristic_distance(double c6, double omega_max, double delta_max);

// Draws (Ω, Δ) pairs and returns the sup-distance between the empirical CDF
// of η and eta_cdf.
double eta_monte_carlo_ks(Rng& rng, const EtaModel& model, int n_samples);

// Median and central-68% band of an ensemble of ⟨n0 n1⟩ values.
Summary blockade_diagnostic(std::span<const double> nn_correlations);

}  // namespace rydpulse
