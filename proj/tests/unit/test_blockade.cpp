#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "rydpulse/blockade.hpp"
#include "rydpulse/hamiltonian.hpp"

using namespace rydpulse;
using boost::math::quadrature::gauss_kronrod;

namespace {

double quad(const EtaModel& m, double a, double b) {
    if (b <= a) return 0.0;
    return gauss_kronrod<double, 61>::integrate([&](double x) { return eta_pdf(x, m); }, a, b, 8, 1e-13);
}

// Integral of the pdf over [a, b], split at the breakpoints so every piece is smooth.
double quad_split(const EtaModel& m, double a, double b) {
    const double lo = m.eta_minus(), hi = m.eta_plus();
    double total = 0.0;
    double x = a;
    for (double cut : {lo, hi, b}) {
        const double y = std::min(cut, b);
        if (y > x) {
            total += quad(m, x, y);
            x = y;
        }
    }
    return total;
}

std::vector<EtaModel> models() {
    std::vector<EtaModel> out;
    for (double d : {5.0, 6.0, 7.0, 7.44, 8.0, 10.0}) out.push_back(eta_model_for_spacing(d, kDefaultC6, 12.0, 20.0));
    out.push_back(make_eta_model(20.0, 12.0, 20.0));  // V == Δ_max
    out.push_back(make_eta_model(0.3, 12.0, 20.0));
    return out;
}

}  // namespace

TEST_CASE("model thresholds") {
    const auto a = eta_model_for_spacing(5.0, kDefaultC6, 12.0, 20.0);
    CHECK(a.v == doctest::Approx(346.912192));
    CHECK(a.interaction_dominated());
    CHECK(a.eta_minus() == doctest::Approx(12.0 / (a.v + 20.0)));
    CHECK(a.eta_plus() == doctest::Approx(12.0 / (a.v - 20.0)));
    const auto b = eta_model_for_spacing(10.0, kDefaultC6, 12.0, 20.0);
    CHECK_FALSE(b.interaction_dominated());
    CHECK(b.eta_minus() <= b.eta_plus());
    CHECK(make_eta_model(20.0, 12.0, 20.0).eta_plus() == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(make_eta_model(0.0, 12.0, 20.0), std::invalid_argument);
    CHECK_THROWS_AS(eta_pdf(-1.0, a), std::invalid_argument);
}

TEST_CASE("Case A plateau and cutoff") {
    const auto m = make_eta_model(347.0, 12.0, 20.0);
    CHECK(eta_pdf(0.0, m) == doctest::Approx(347.0 / 12.0).epsilon(1e-14));
    CHECK(eta_pdf(m.eta_plus() * 1.0001, m) == 0.0);
    CHECK(eta_pdf(m.eta_plus(), m) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pdf is continuous at the breakpoints") {
    for (const auto& m : models()) {
        const double lo = m.eta_minus();
        const double below = m.plateau_density();
        const double above = eta_pdf(lo * (1.0 + 1e-15), m);
        CHECK(std::abs(below - above) <= 1e-12 * std::max(1.0, below));
        if (!m.interaction_dominated() && std::isfinite(m.eta_plus())) {
            const double hi = m.eta_plus();
            CHECK(eta_pdf(hi, m) == doctest::Approx(eta_pdf(hi * (1.0 + 1e-14), m)).epsilon(1e-10));
        }
    }
}

TEST_CASE("pdf integrates to one") {
    for (const auto& m : models()) {
        const double lo = m.eta_minus(), hi = m.eta_plus();
        double total = quad(m, 0.0, lo);
        if (std::isfinite(hi)) {
            total += quad_split(m, lo, hi);
            // Exact tail of (Ω/2Δ)/η² beyond η₊ in Case B.
            if (!m.interaction_dominated()) total += m.omega_max / (2.0 * m.delta_max) / hi;
        } else {
            total += gauss_kronrod<double, 61>::integrate([&](double x) { return eta_pdf(x, m); }, lo,
                                                          std::numeric_limits<double>::infinity(), 15, 1e-13);
        }
        CHECK(std::abs(total - 1.0) < 1e-8);
    }
}

TEST_CASE("closed-form cdf agrees with quadrature of the pdf") {
    for (const auto& m : models()) {
        const double top = std::isfinite(m.eta_plus()) ? 3.0 * m.eta_plus() : 50.0 * m.eta_minus();
        CHECK(eta_cdf(0.0, m) == 0.0);
        CHECK(eta_cdf(m.eta_minus(), m) == doctest::Approx(m.plateau_density() * m.eta_minus()).epsilon(1e-14));
        double prev = 0.0;
        double worst = 0.0;
        double accumulated = 0.0;
        for (int i = 1; i <= 1000; ++i) {
            const double eta = top * i / 1000.0;
            accumulated += quad_split(m, top * (i - 1) / 1000.0, eta);
            const double c = eta_cdf(eta, m);
            CHECK(c >= prev);
            prev = c;
            worst = std::max(worst, std::abs(c - accumulated));
        }
        CHECK(worst < 1e-8);
        CHECK(eta_cdf(1e12, m) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("cdf matches direct sampling of the drive amplitudes") {
    Rng rng(17);
    for (double d : {5.0, 7.0, 10.0}) {
        const auto m = eta_model_for_spacing(d, kDefaultC6, 12.0, 20.0);
        // Independent sampler (no library helper).
        std::uniform_real_distribution<double> om(0.0, 12.0), de(-20.0, 20.0);
        std::vector<double> etas(1000000);
        for (double& e : etas) {
            const double omega = om(rng);
            e = omega / std::abs(m.v - de(rng));
        }
        std::sort(etas.begin(), etas.end());
        double sup = 0.0;
        const double n = etas.size();
        for (std::size_t i = 0; i < etas.size(); ++i) {
            const double f = eta_cdf(etas[i], m);
            sup = std::max({sup, std::abs(f - i / n), std::abs((i + 1) / n - f)});
        }
        CAPTURE(d);
        CHECK(sup < 2e-3);
        CHECK(eta_monte_carlo_ks(rng, m, 200000) < 2e-3 * std::sqrt(5.0));
    }
}

TEST_CASE("characteristic distance") {
    CHECK(characteristic_distance(kDefaultC6, 12.0, 20.0) == doctest::Approx(7.4385).epsilon(1e-4));
    CHECK(characteristic_distance(64.0 * kDefaultC6, 12.0, 20.0) ==
          doctest::Approx(2.0 * characteristic_distance(kDefaultC6, 12.0, 20.0)).epsilon(1e-14));
    CHECK(characteristic_distance(32.0, 12.0, 20.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS(characteristic_distance(0.0, 12.0, 20.0));
}

TEST_CASE("blockade diagnostic summary") {
    const std::vector<double> zeros(10, 0.0);
    const auto s = blockade_diagnostic(zeros);
    CHECK(s.median == 0.0);
    CHECK(s.hi == 0.0);
    CHECK_THROWS(blockade_diagnostic(std::vector<double>{}));
}
