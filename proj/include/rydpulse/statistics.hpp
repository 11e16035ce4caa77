#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rydpulse/entanglement.hpp"
#include "rydpulse/rng.hpp"
#include "rydpulse/sector.hpp"

namespace rydpulse {

// Fixed-edge histogram. Values outside [edges.front(), edges.back()] are
// counted in `overflow`, which acts as one extra bin in masses().
struct Histogram {
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
    std::uint64_t overflow = 0;

    static Histogram uniform(double lo, double hi, int bins);

    void add(double value);
    void add(std::span<const double> values);
    void merge(const Histogram& other);

    std::size_t bins() const { return counts.size(); }
    std::uint64_t total() const;
    // Probability per bin; the overflow mass is appended when overflow > 0 or
    // `with_overflow` is set.
    std::vector<double> masses(bool with_overflow = true) const;
    // count / (total * width). Integrates to 1 when nothing overflowed.
    std::vector<double> density() const;
};

// Merges bins of `hist` onto `edges`, which must be a subset of hist.edges
// sharing both endpoints.
Histogram rebin(const Histogram& hist, const std::vector<double>& edges);

inline constexpr double kDefaultKeepCentral = 0.75;

struct GapRatios {
    std::vector<double> ratios;
    int degenerate = 0;  // zero-gap pairs, reported as ratio 0
};

// Sorts the levels, trims ceil((1-keep)/2 * n) from each end, and returns
// r_n = min(g_n/g_{n+1}, g_{n+1}/g_n) over consecutive gaps. Throws when
// fewer than 3 levels remain.
GapRatios gap_ratios(std::vector<double> levels, double keep_central = kDefaultKeepCentral);
GapRatios gap_ratios(const EntanglementData& data, double keep_central = kDefaultKeepCentral);

// Folded surmise on [0, 1]; beta must be 1 or 2.
double wigner_dyson_pdf(double r, int beta);
// Poisson reference 2 / (1 + r)^2 on [0, 1].
double poisson_ratio_pdf(double r);

// ω = 2^N |ψ(σ)|² for every bitstring.
std::vector<double> bitstring_omegas(const StateVector& state);

double porter_thomas_pdf(double omega);
// Exact exp(-ω) mass of each bin of `layout`, plus the tail beyond the last edge.
std::vector<double> porter_thomas_masses(const Histogram& layout);

// Natural-log Jensen–Shannon divergence of two probability vectors.
double js_divergence(std::span<const double> p, std::span<const double> q);
// Throws std::invalid_argument when the edges differ.
double js_divergence(const Histogram& p, const Histogram& q);

struct Summary {
    double median = 0.0;
    double lo = 0.0;  // 16th percentile
    double hi = 0.0;  // 84th percentile
    std::size_t count = 0;
};

// Linear interpolation between order statistics, h = (n - 1) p.
double quantile(std::vector<double> values, double p);
Summary summarize(std::span<const double> values);
double mean(std::span<const double> values);

enum class ReferenceEnsemble { complex_ginibre, real_ginibre, poisson };

std::string to_string(ReferenceEnsemble ensemble);

// Normalised Wishart spectra XX†/Tr(XX†) with X of size d_a x d_b, turned into
// pooled gap ratios with the same trimming as the state spectra. The Poisson
// control uses levels with independent Exp(1) spacings.
std::vector<double> wishart_reference_ratios(Rng& rng, int d_a, int d_b, ReferenceEnsemble ensemble,
                                             int n_samples, double keep_central = kDefaultKeepCentral);

}  // namespace rydpulse
