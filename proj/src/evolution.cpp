#include "rydpulse/evolution.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rydpulse {

double PulseSequence::total_time() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.dt;
    return t;
}

void validate(const PulseConstraints& c) {
    if (!(c.omega_max > 0.0) || !(c.delta_max > 0.0) || c.m_segments < 1 || !(c.t_final > 0.0)) {
        throw std::invalid_argument("pulse constraints must be positive (omega_max, delta_max, m_segments, t_final)");
    }
}

void validate(const PulseSequence& seq) {
    if (seq.segments.empty()) throw std::invalid_argument("pulse sequence has no segments");
    for (std::size_t k = 0; k < seq.segments.size(); ++k) {
        const auto& s = seq.segments[k];
        if (!(s.dt > 0.0) || !std::isfinite(s.dt)) {
            throw std::invalid_argument("pulse segment " + std::to_string(k) + " has non-positive duration");
        }
        if (!std::isfinite(s.rabi) || !std::isfinite(s.detuning)) {
            throw std::invalid_argument("pulse segment " + std::to_string(k) + " has non-finite amplitudes");
        }
    }
}

PulseSequence sample_random_pulses(Rng& rng, const PulseConstraints& c) {
    validate(c);
    std::uniform_real_distribution<double> rabi(0.0, c.omega_max);
    std::uniform_real_distribution<double> detuning(-c.delta_max, c.delta_max);
    PulseSequence seq;
    seq.segments.reserve(c.m_segments);
    const double dt = c.t_final / c.m_segments;
    for (int k = 0; k < c.m_segments; ++k) {
        PulseSegment s;
        s.dt = dt;
        s.rabi = rabi(rng);
        s.detuning = detuning(rng);
        seq.segments.push_back(s);
    }
    return seq;
}

SegmentSpectrum diagonalize(const Eigen::MatrixXd& hamiltonian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("segment Hamiltonian eigendecomposition failed");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXcd apply_propagator(const SegmentSpectrum& spectrum, double dt, const Eigen::VectorXcd& psi) {
    const auto& v = spectrum.eigenvectors;
    Eigen::VectorXcd coeff = v.transpose() * psi;
    for (Eigen::Index a = 0; a < coeff.size(); ++a) {
        coeff[a] *= std::polar(1.0, -dt * spectrum.eigenvalues[a]);
    }
    return v * coeff;
}

StateVector segment_propagate(const StateVector& state, const DriveAmplitudes& drive, double dt,
                              const SectorOperators& ops) {
    if (!(dt > 0.0)) throw std::invalid_argument("segment_propagate: dt must be positive");
    if (state.basis != BasisTag::sector || state.amplitudes.size() != ops.dim()) {
        throw std::invalid_argument("segment_propagate: expected a sector state matching the operators");
    }
    const auto spectrum = diagonalize(assemble(drive, ops));
    return {apply_propagator(spectrum, dt, state.amplitudes), BasisTag::sector, state.n_atoms};
}

StateVector evolve(const StateVector& initial, const PulseSequence& seq, const SectorOperators& ops) {
    validate(seq);
    StateVector state = initial;
    for (const auto& s : seq.segments) {
        state = segment_propagate(state, {s.rabi, s.detuning}, s.dt, ops);
    }
    return state;
}

StateVector default_initial(const SectorBasis& basis) {
    StateVector psi;
    psi.basis = BasisTag::sector;
    psi.n_atoms = basis.n_atoms;
    psi.amplitudes = Eigen::VectorXcd::Zero(basis.dim());
    psi.amplitudes[0] = 1.0;
    return psi;
}

nlohmann::json to_json(const PulseSequence& seq) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : seq.segments) {
        segments.push_back({{"dt_us", s.dt}, {"omega", s.rabi}, {"delta", s.detuning}});
    }
    return nlohmann::json{{"segments", segments}};
}

PulseSequence pulse_sequence_from_json(const nlohmann::json& doc) {
    PulseSequence seq;
    for (const auto& s : doc.at("segments")) {
        seq.segments.push_back({s.at("dt_us").get<double>(), s.at("omega").get<double>(),
                                s.at("delta").get<double>()});
    }
    validate(seq);
    return seq;
}

}  // namespace rydpulse
