#pragma once

#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rydpulse/hamiltonian.hpp"
#include "rydpulse/rng.hpp"
#include "rydpulse/sector.hpp"

namespace rydpulse {

struct PulseSegment {
    double dt = 0.0;        // µs
    double rabi = 0.0;      // rad/µs
    double detuning = 0.0;  // rad/µs
};

struct PulseSequence {
    std::vector<PulseSegment> segments;

    double total_time() const;
    std::size_t size() const { return segments.size(); }
};

struct PulseConstraints {
    double omega_max = 12.0;
    double delta_max = 20.0;
    int m_segments = 30;
    double t_final = 1.0;
};

void validate(const PulseConstraints& constraints);
// Throws on an empty sequence or a non-positive duration.
void validate(const PulseSequence& seq);

// dt_k = T_f / M, Ω_k ~ U[0, Ω_max], Δ_k ~ U[-Δ_max, Δ_max], drawn segment by segment.
PulseSequence sample_random_pulses(Rng& rng, const PulseConstraints& constraints);

// Eigendecomposition H = V diag(λ) Vᵀ of one segment's (real symmetric) generator.
struct SegmentSpectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
};

SegmentSpectrum diagonalize(const Eigen::MatrixXd& hamiltonian);

// exp(-i dt H) applied through a precomputed spectrum.
Eigen::VectorXcd apply_propagator(const SegmentSpectrum& spectrum, double dt, const Eigen::VectorXcd& psi);

StateVector segment_propagate(const StateVector& state, const DriveAmplitudes& drive, double dt,
                              const SectorOperators& ops);

// Applies the segments in time order, U = U_M ... U_1.
StateVector evolve(const StateVector& initial, const PulseSequence& seq, const SectorOperators& ops);

// |↓...↓⟩: unit amplitude on the all-down orbit (orbit 0).
StateVector default_initial(const SectorBasis& basis);

nlohmann::json to_json(const PulseSequence& seq);
PulseSequence pulse_sequence_from_json(const nlohmann::json& doc);

}  // namespace rydpulse
