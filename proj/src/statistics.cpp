#include "rydpulse/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace rydpulse {

Histogram Histogram::uniform(double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) throw std::invalid_argument("Histogram::uniform: need bins >= 1 and hi > lo");
    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    h.edges.back() = hi;
    h.counts.assign(bins, 0);
    return h;
}

void Histogram::add(double value) {
    if (!(value >= edges.front()) || value > edges.back()) {
        ++overflow;
        return;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), value);
    auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (bin >= counts.size()) bin = counts.size() - 1;  // value == last edge
    ++counts[bin];
}

void Histogram::add(std::span<const double> values) {
    for (double v : values) add(v);
}

void Histogram::merge(const Histogram& other) {
    if (other.edges != edges) throw std::invalid_argument("Histogram::merge: bin edges differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    overflow += other.overflow;
}

std::uint64_t Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), overflow);
}

std::vector<double> Histogram::masses(bool with_overflow) const {
    const double n = static_cast<double>(total());
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = n > 0 ? counts[i] / n : 0.0;
    if (with_overflow || overflow > 0) out.push_back(n > 0 ? overflow / n : 0.0);
    return out;
}

std::vector<double> Histogram::density() const {
    const double n = static_cast<double>(total());
    std::vector<double> out(counts.size(), 0.0);
    if (n == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / (n * (edges[i + 1] - edges[i]));
    return out;
}

Histogram rebin(const Histogram& hist, const std::vector<double>& edges) {
    if (edges.size() < 2 || edges.front() != hist.edges.front() || edges.back() != hist.edges.back()) {
        throw std::invalid_argument("rebin: target edges must share both endpoints");
    }
    Histogram out;
    out.edges = edges;
    out.counts.assign(edges.size() - 1, 0);
    out.overflow = hist.overflow;
    std::size_t target = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        while (hist.edges[i] >= edges[target + 1]) ++target;
        if (hist.edges[i + 1] > edges[target + 1]) {
            throw std::invalid_argument("rebin: target edges are not a subset of the source edges");
        }
        out.counts[target] += hist.counts[i];
    }
    for (double e : edges) {
        if (!std::binary_search(hist.edges.begin(), hist.edges.end(), e)) {
            throw std::invalid_argument("rebin: target edges are not a subset of the source edges");
        }
    }
    return out;
}

GapRatios gap_ratios(std::vector<double> levels, double keep_central) {
    if (!(keep_central > 0.0) || keep_central > 1.0) throw std::invalid_argument("gap_ratios: keep fraction must lie in (0, 1]");
    std::sort(levels.begin(), levels.end());
    const auto n = levels.size();
    const auto trim = static_cast<std::size_t>(std::ceil((1.0 - keep_central) / 2.0 * n - 1e-9));
    if (n < 2 * trim + 3) {
        throw std::invalid_argument("gap_ratios: fewer than 3 levels remain after trimming " + std::to_string(n) + " levels");
    }
    GapRatios out;
    const std::size_t first = trim, last = n - trim;  // retained window [first, last)
    for (std::size_t i = first + 1; i + 1 < last; ++i) {
        const double g_prev = levels[i] - levels[i - 1];
        const double g_next = levels[i + 1] - levels[i];
        const double hi = std::max(g_prev, g_next);
        if (hi <= 0.0) {
            ++out.degenerate;
            out.ratios.push_back(0.0);
            continue;
        }
        out.ratios.push_back(std::min(g_prev, g_next) / hi);
    }
    return out;
}

GapRatios gap_ratios(const EntanglementData& data, double keep_central) {
    return gap_ratios(data.log_spectrum, keep_central);
}

double wigner_dyson_pdf(double r, int beta) {
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("wigner_dyson_pdf: r must lie in [0, 1]");
    double z = 0.0;
    if (beta == 1) {
        z = 8.0 / 27.0;
    } else if (beta == 2) {
        z = 4.0 * std::numbers::pi / (81.0 * std::numbers::sqrt3);
    } else {
        throw std::invalid_argument("wigner_dyson_pdf: beta must be 1 or 2");
    }
    return 2.0 * std::pow(r + r * r, beta) / (z * std::pow(1.0 + r + r * r, 1.0 + 1.5 * beta));
}

double poisson_ratio_pdf(double r) {
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("poisson_ratio_pdf: r must lie in [0, 1]");
    return 2.0 / ((1.0 + r) * (1.0 + r));
}

std::vector<double> bitstring_omegas(const StateVector& state) {
    if (state.basis != BasisTag::full) throw std::invalid_argument("bitstring_omegas: expected a full-basis state");
    const double dim = static_cast<double>(state.amplitudes.size());
    std::vector<double> out(state.amplitudes.size());
    for (Eigen::Index s = 0; s < state.amplitudes.size(); ++s) out[s] = dim * std::norm(state.amplitudes[s]);
    return out;
}

double porter_thomas_pdf(double omega) {
    if (omega < 0.0) throw std::invalid_argument("porter_thomas_pdf: omega must be non-negative");
    return std::exp(-omega);
}

std::vector<double> porter_thomas_masses(const Histogram& layout) {
    if (layout.edges.front() < 0.0) throw std::invalid_argument("porter_thomas_masses: edges must be non-negative");
    std::vector<double> out(layout.bins());
    for (std::size_t i = 0; i < layout.bins(); ++i) {
        out[i] = std::exp(-layout.edges[i]) - std::exp(-layout.edges[i + 1]);
    }
    // Mass below the first edge also lands in the overflow bin of Histogram::add.
    out.push_back(std::exp(-layout.edges.back()) + (1.0 - std::exp(-layout.edges.front())));
    return out;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("js_divergence: distributions have different support sizes");
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return std::max(0.0, js);
}

double js_divergence(const Histogram& p, const Histogram& q) {
    if (p.edges != q.edges) throw std::invalid_argument("js_divergence: histograms use different binning; rebin first");
    const auto pm = p.masses(true);
    const auto qm = q.masses(true);
    return js_divergence(pm, qm);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty input");
    std::vector<double> v(values.begin(), values.end());
    return {quantile(v, 0.5), quantile(v, 0.16), quantile(v, 0.84), v.size()};
}

double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

std::string to_string(ReferenceEnsemble ensemble) {
    switch (ensemble) {
        case ReferenceEnsemble::complex_ginibre: return "GUE-Ginibre";
        case ReferenceEnsemble::real_ginibre: return "GOE-real-Ginibre";
        case ReferenceEnsemble::poisson: break;
    }
    return "Poisson";
}

std::vector<double> wishart_reference_ratios(Rng& rng, int d_a, int d_b, ReferenceEnsemble ensemble,
                                             int n_samples, double keep_central) {
    if (d_a < 1 || d_a > d_b) throw std::invalid_argument("wishart_reference_ratios: need 1 <= d_a <= d_b");
    std::vector<double> pooled;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> spacing(1.0);
    for (int sample = 0; sample < n_samples; ++sample) {
        std::vector<double> levels(d_a);
        if (ensemble == ReferenceEnsemble::poisson) {
            double level = 0.0;
            for (double& l : levels) l = (level += spacing(rng));
        } else {
            Eigen::MatrixXcd x(d_a, d_b);
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                for (Eigen::Index j = 0; j < x.cols(); ++j) {
                    const double re = normal(rng);
                    const double im = ensemble == ReferenceEnsemble::complex_ginibre ? normal(rng) : 0.0;
                    x(i, j) = {re, im};
                }
            }
            const Eigen::MatrixXcd w = x * x.adjoint();
            const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(w, Eigen::EigenvaluesOnly).eigenvalues();
            const double trace = eig.sum();
            for (int i = 0; i < d_a; ++i) levels[i] = -std::log(std::max(eig[i] / trace, 1e-300));
        }
        const auto r = gap_ratios(std::move(levels), keep_central);
        pooled.insert(pooled.end(), r.ratios.begin(), r.ratios.end());
    }
    return pooled;
}

}  // namespace rydpulse
