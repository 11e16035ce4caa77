#include "rydpulse/blockade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rydpulse {

double EtaModel::eta_minus() const { return omega_max / (v + delta_max); }

double EtaModel::eta_plus() const {
    const double gap = std::abs(v - delta_max);
    return gap == 0.0 ? std::numeric_limits<double>::infinity() : omega_max / gap;
}

double EtaModel::plateau_density() const {
    if (interaction_dominated()) return v / omega_max;
    return (delta_max * delta_max + v * v) / (2.0 * omega_max * delta_max);
}

EtaModel make_eta_model(double v, double omega_max, double delta_max) {
    if (!(v > 0.0)) throw std::invalid_argument("eta model: interaction V must be positive");
    if (!(omega_max > 0.0) || !(delta_max > 0.0)) throw std::invalid_argument("eta model: drive bounds must be positive");
    return {v, omega_max, delta_max};
}

EtaModel eta_model_for_spacing(double spacing, double c6, double omega_max, double delta_max) {
    if (!(spacing > 0.0)) throw std::invalid_argument("eta model: spacing must be positive");
    return make_eta_model(c6 / std::pow(spacing, 6), omega_max, delta_max);
}

double eta_pdf(double eta, const EtaModel& m) {
    if (!(m.v > 0.0)) throw std::invalid_argument("eta_pdf: interaction V must be positive");
    if (eta < 0.0) throw std::invalid_argument("eta_pdf: eta must be non-negative");
    const double lo = m.eta_minus();
    const double hi = m.eta_plus();
    if (eta <= lo) return m.plateau_density();
    const double scale = m.omega_max / (4.0 * m.delta_max);
    const double offset = (m.v - m.delta_max) / m.omega_max;
    if (m.interaction_dominated()) {
        if (eta > hi) return 0.0;
        return scale * (1.0 / (eta * eta) - offset * offset);
    }
    if (eta <= hi) return scale * (1.0 / (eta * eta) + offset * offset);
    return m.omega_max / (2.0 * m.delta_max) / (eta * eta);
}

double eta_cdf(double eta, const EtaModel& m) {
    if (!(m.v > 0.0)) throw std::invalid_argument("eta_cdf: interaction V must be positive");
    if (eta < 0.0) throw std::invalid_argument("eta_cdf: eta must be non-negative");
    const double lo = m.eta_minus();
    const double hi = m.eta_plus();
    const double at_lo = m.plateau_density() * lo;
    if (eta <= lo) return m.plateau_density() * eta;

    const double scale = m.omega_max / (4.0 * m.delta_max);
    const double offset_sq = std::pow((m.v - m.delta_max) / m.omega_max, 2);
    const double sign = m.interaction_dominated() ? -1.0 : 1.0;
    auto middle = [&](double x) { return at_lo + scale * ((1.0 / lo - 1.0 / x) + sign * offset_sq * (x - lo)); };

    if (eta <= hi) return std::min(1.0, middle(eta));
    if (m.interaction_dominated()) return 1.0;
    const double tail = m.omega_max / (2.0 * m.delta_max);
    return std::min(1.0, middle(hi) + tail * (1.0 / hi - 1.0 / eta));
}

double characteristic_distance(double c6, double omega_max, double delta_max) {
    if (!(c6 > 0.0) || !(omega_max > 0.0) || !(delta_max > 0.0)) {
        throw std::invalid_argument("characteristic_distance: inputs must be positive");
    }
    return std::pow(c6 / (omega_max + delta_max), 1.0 / 6.0);
}

double eta_monte_carlo_ks(Rng& rng, const EtaModel& model, int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("eta_monte_carlo_ks: need at least one sample");
    std::uniform_real_distribution<double> rabi(0.0, model.omega_max);
    std::uniform_real_distribution<double> detuning(-model.delta_max, model.delta_max);
    std::vector<double> etas(n_samples);
    for (double& e : etas) {
        const double omega = rabi(rng);
        const double delta = detuning(rng);
        e = omega / std::abs(model.v - delta);
    }
    std::sort(etas.begin(), etas.end());
    double sup = 0.0;
    const double n = n_samples;
    for (int i = 0; i < n_samples; ++i) {
        const double f = eta_cdf(etas[i], model);
        sup = std::max({sup, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return sup;
}

Summary blockade_diagnostic(std::span<const double> nn_correlations) {
    return summarize(nn_correlations);
}

}  // namespace rydpulse
