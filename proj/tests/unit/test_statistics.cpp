#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "rydpulse/statistics.hpp"

using namespace rydpulse;
using boost::math::quadrature::gauss_kronrod;

namespace {

double integrate(const auto& f, double a, double b) {
    return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

double sample_mean_se(const std::vector<double>& v, double* se) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    *se = std::sqrt(ss / (v.size() - 1) / v.size());
    return m;
}

}  // namespace

TEST_CASE("histogram binning") {
    auto h = Histogram::uniform(0.0, 1.0, 4);
    h.add(0.0);
    h.add(0.25);
    h.add(1.0);
    h.add(1.5);
    h.add(-0.1);
    CHECK(h.counts == std::vector<std::uint64_t>{1, 1, 0, 1});
    CHECK(h.overflow == 2);
    CHECK(h.total() == 5);
    const auto m = h.masses();
    CHECK(m.size() == 5);
    CHECK(m.back() == doctest::Approx(0.4));

    auto g = Histogram::uniform(0.0, 1.0, 4);
    g.add(0.6);
    h.merge(g);
    CHECK(h.counts[2] == 1);
    CHECK_THROWS(h.merge(Histogram::uniform(0.0, 2.0, 4)));
    CHECK_THROWS(Histogram::uniform(1.0, 0.0, 3));
}

TEST_CASE("histogram density integrates to one") {
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto h = Histogram::uniform(0.0, 1.0, 50);
    for (int i = 0; i < 10000; ++i) h.add(u(rng));
    const auto d = h.density();
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) total += d[i] * (h.edges[i + 1] - h.edges[i]);
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("rebin merges onto coarser edges") {
    auto h = Histogram::uniform(0.0, 1.0, 4);
    for (double v : {0.1, 0.3, 0.6, 0.9, 0.95}) h.add(v);
    const auto r = rebin(h, {0.0, 0.5, 1.0});
    CHECK(r.counts == std::vector<std::uint64_t>{2, 3});
    CHECK_THROWS(rebin(h, {0.0, 0.4, 1.0}));
    CHECK_THROWS(rebin(h, {0.0, 0.5}));
}

TEST_CASE("gap ratio examples") {
    const auto equal = gap_ratios({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
    CHECK(equal.ratios.size() == 10);  // 16 levels keep 12, giving 10 ratios
    for (double r : equal.ratios) CHECK(r == 1.0);

    const auto three = gap_ratios({3, 0, 1}, 1.0);
    REQUIRE(three.ratios.size() == 1);
    CHECK(three.ratios[0] == 0.5);

    const auto degen = gap_ratios({0, 1, 1, 1, 2}, 1.0);
    CHECK(degen.degenerate == 1);
    CHECK(degen.ratios == std::vector<double>{0.0, 0.0, 0.0});

    CHECK_THROWS(gap_ratios({0, 1}, 1.0));
    CHECK_THROWS(gap_ratios({0, 1, 3}));  // trimming leaves a single level
    CHECK_THROWS(gap_ratios({0, 1, 2, 3}, 0.0));
}

TEST_CASE("gap ratio trim is symmetric") {
    // Outlying levels at both ends must be removed before ratios are formed.
    std::vector<double> levels{-100.0, 0, 1, 2, 3, 4, 5, 6, 100.0};
    const auto r = gap_ratios(levels, 0.75);
    CHECK(r.ratios.size() == 3);  // ceil(9/8) = 2 levels dropped per end
    for (double x : r.ratios) CHECK(x == 1.0);
}

TEST_CASE("Wigner-Dyson surmise normalisation and means") {
    for (int beta : {1, 2}) {
        CHECK(wigner_dyson_pdf(0.0, beta) == 0.0);
        const double norm = integrate([beta](double r) { return wigner_dyson_pdf(r, beta); }, 0.0, 1.0);
        CHECK(std::abs(norm - 1.0) < 1e-8);
    }
    const double m1 = integrate([](double r) { return r * wigner_dyson_pdf(r, 1); }, 0.0, 1.0);
    const double m2 = integrate([](double r) { return r * wigner_dyson_pdf(r, 2); }, 0.0, 1.0);
    CHECK(m1 == doctest::Approx(4.0 - 2.0 * std::numbers::sqrt3).epsilon(1e-10));
    CHECK(m1 == doctest::Approx(0.53590).epsilon(1e-4));
    CHECK(m2 == doctest::Approx(2.0 * std::numbers::sqrt3 / std::numbers::pi - 0.5).epsilon(1e-10));
    CHECK(m2 == doctest::Approx(0.60266).epsilon(1e-4));
    CHECK(integrate(poisson_ratio_pdf, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(wigner_dyson_pdf(0.5, 4));
    CHECK_THROWS(wigner_dyson_pdf(1.5, 2));
}

TEST_CASE("bitstring omegas") {
    StateVector uniform{Eigen::VectorXcd::Constant(32, 1.0 / std::sqrt(32.0)), BasisTag::full, 5};
    for (double w : bitstring_omegas(uniform)) CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    StateVector down{Eigen::VectorXcd::Unit(32, 0), BasisTag::full, 5};
    const auto w = bitstring_omegas(down);
    CHECK(w[0] == 32.0);
    CHECK(std::accumulate(w.begin() + 1, w.end(), 0.0) == 0.0);
}

TEST_CASE("Porter-Thomas density and bin masses") {
    CHECK(porter_thomas_pdf(0.0) == 1.0);
    CHECK_THROWS(porter_thomas_pdf(-1.0));
    CHECK(integrate(porter_thomas_pdf, 0.0, 60.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate([](double w) { return w * porter_thomas_pdf(w); }, 0.0, 60.0) == doctest::Approx(1.0).epsilon(1e-12));

    const auto layout = Histogram::uniform(0.0, 8.0, 60);
    const auto masses = porter_thomas_masses(layout);
    CHECK(masses.size() == 61);
    CHECK(std::accumulate(masses.begin(), masses.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(masses.back() == doctest::Approx(std::exp(-8.0)));
    CHECK(masses[3] == doctest::Approx(integrate(porter_thomas_pdf, layout.edges[3], layout.edges[4])).epsilon(1e-12));
}

TEST_CASE("Haar-sector Born weights are close to Porter-Thomas") {
    Rng rng(2);
    const auto basis = dihedral_orbits(9);
    auto hist = Histogram::uniform(0.0, 8.0, 60);
    for (int i = 0; i < 500; ++i) hist.add(bitstring_omegas(embed(haar_sector(rng, basis), basis)));
    const double js = js_divergence(hist.masses(true), porter_thomas_masses(hist));
    CHECK(js < 1e-2);
}

TEST_CASE("JS divergence limits") {
    const std::vector<double> p{0.2, 0.3, 0.5, 0.0}, q{0.0, 0.0, 0.0, 1.0};
    CHECK(js_divergence(p, p) == 0.0);
    CHECK(js_divergence(p, q) == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
    const std::vector<double> r{0.25, 0.25, 0.25, 0.25};
    CHECK(js_divergence(p, r) == doctest::Approx(js_divergence(r, p)).epsilon(1e-15));
    CHECK(js_divergence(p, r) > 0.0);
    CHECK(js_divergence(p, r) < std::numbers::ln2);
    CHECK_THROWS(js_divergence(Histogram::uniform(0, 1, 4), Histogram::uniform(0, 1, 5)));
}

TEST_CASE("JS divergence between two same-law samples sits below the bootstrap floor") {
    Rng rng(3);
    const auto basis = dihedral_orbits(9);
    const auto part = find_asymmetric_bipartition(9);
    auto draw = [&](int n) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i) v.push_back(schmidt_decompose(embed(haar_sector(rng, basis), basis), part).normalized_entropy);
        return v;
    };
    const auto a = draw(10000), b = draw(10000);
    auto ha = Histogram::uniform(0.0, 1.0, 50), hb = ha;
    ha.add(a);
    hb.add(b);
    // Calibration: JS between pairs of bootstrap resamples of `a`.
    std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
    std::vector<double> floor;
    for (int rep = 0; rep < 40; ++rep) {
        auto x = Histogram::uniform(0.0, 1.0, 50), y = x;
        for (std::size_t i = 0; i < a.size(); ++i) {
            x.add(a[pick(rng)]);
            y.add(a[pick(rng)]);
        }
        floor.push_back(js_divergence(x, y));
    }
    CHECK(js_divergence(ha, hb) < quantile(floor, 0.99) * 1.5);
}

TEST_CASE("summaries") {
    const std::vector<double> v{3, 1, 2};
    CHECK(summarize(v).median == 2.0);
    const std::vector<double> c(7, 4.2);
    const auto s = summarize(c);
    CHECK(s.lo == s.hi);
    CHECK(quantile({0, 10}, 0.25) == 2.5);
    CHECK_THROWS(summarize(std::vector<double>{}));

    Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> big(100000);
    for (double& x : big) x = u(rng);
    const auto sb = summarize(big);
    CHECK(std::abs(sb.lo - 0.16) < 0.01);
    CHECK(std::abs(sb.hi - 0.84) < 0.01);
    CHECK(std::abs(sb.median - 0.5) < 0.01);
}

TEST_CASE("random-matrix reference ensembles") {
    Rng rng(5);
    double se = 0.0;
    const auto complex_r = wishart_reference_ratios(rng, 16, 32, ReferenceEnsemble::complex_ginibre, 4000);
    CHECK(std::abs(sample_mean_se(complex_r, &se) - 0.599) < 0.01);
    const auto real_r = wishart_reference_ratios(rng, 16, 32, ReferenceEnsemble::real_ginibre, 4000);
    CHECK(std::abs(sample_mean_se(real_r, &se) - 0.536) < 0.01);
    const auto poisson_r = wishart_reference_ratios(rng, 16, 32, ReferenceEnsemble::poisson, 20000);
    const double mp = sample_mean_se(poisson_r, &se);
    CHECK(std::abs(mp - (2.0 * std::numbers::ln2 - 1.0)) < std::max(3.0 * se, 0.01));
    CHECK_THROWS(wishart_reference_ratios(rng, 32, 16, ReferenceEnsemble::real_ginibre, 1));
}

TEST_CASE("reference ratios are reproducible from the seed") {
    Rng a(9), b(9);
    CHECK(wishart_reference_ratios(a, 8, 16, ReferenceEnsemble::complex_ginibre, 20) ==
          wishart_reference_ratios(b, 8, 16, ReferenceEnsemble::complex_ginibre, 20));
}
