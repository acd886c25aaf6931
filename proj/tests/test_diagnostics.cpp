#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rech/diagnostics.hpp"
#include "rech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace rech;

namespace {

// P(k, x) = x^k e^{-x} sum_n x^n / Gamma(k + n + 1).
double lower_gamma_series(double k, double x) {
    double term = std::exp(k * std::log(x) - x - std::lgamma(k + 1.0));
    double sum = term;
    for (int n = 1; n < 500; ++n) {
        term *= x / (k + n);
        sum += term;
    }
    return sum;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    return x;
}

}  // namespace

TEST_CASE("chi-squared CDF against the series expansion") {
    CHECK(std::abs(chi_squared_cdf(10.0, 10.0) - lower_gamma_series(5.0, 5.0)) < 1e-10);
    CHECK(chi_squared_cdf(10.0, 10.0) == doctest::Approx(0.559507).epsilon(1e-6));
    CHECK(std::abs(chi_squared_cdf(3.2, 7.0) - lower_gamma_series(3.5, 1.6)) < 1e-10);
    CHECK(chi_squared_cdf(0.0, 4.0) == 0.0);
}

TEST_CASE("sample_moments") {
    std::vector<double> two;
    for (int i = 0; i < 50; ++i) {
        two.push_back(-1.0);
        two.push_back(1.0);
    }
    const auto m = sample_moments(two);
    CHECK(m.mean == doctest::Approx(0.0));
    CHECK(m.std == doctest::Approx(1.0));
    CHECK(m.skewness == doctest::Approx(0.0));
    CHECK(m.kurtosis == doctest::Approx(1.0));
    CHECK(m.min == -1.0);
    CHECK(m.max == 1.0);
    CHECK(std::abs(sample_moments(gaussian(100000, 4)).kurtosis - 3.0) < 0.1);
    CHECK_THROWS_AS((void)sample_moments(std::vector<double>(10, 2.0)), DegenerateInput);
}

TEST_CASE("ljung_box") {
    SUBCASE("zero autocorrelation at every lag") {
        const std::vector<double> x{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0};
        const auto r = autocorrelations(x, 10);
        double q = 0.0;
        const double n = static_cast<double>(x.size());
        for (std::size_t k = 1; k <= 10; ++k) q += r[k - 1] * r[k - 1] / (n - static_cast<double>(k));
        q *= n * (n + 2.0);
        const auto lb = ljung_box(x, 10);
        CHECK(lb.q == doctest::Approx(q).epsilon(1e-12));
        // The two spikes are 11 apart, so every autocorrelation up to lag 10 is zero.
        CHECK(lb.q == 0.0);
        CHECK(lb.p_value == 1.0);
    }
    SUBCASE("strong dependence") {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> d;
        std::vector<double> x(2000);
        x[0] = d(rng);
        for (std::size_t i = 1; i < x.size(); ++i) x[i] = 0.9 * x[i - 1] + d(rng);
        CHECK(ljung_box(x, 10).p_value < 0.001);
    }
    SUBCASE("null p-values rarely extreme") {
        int inside = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto lb = ljung_box(gaussian(2000, 1000 + s), 10);
            CHECK(lb.q >= 0.0);
            CHECK(lb.p_value >= 0.0);
            CHECK(lb.p_value <= 1.0);
            if (lb.p_value > 0.001 && lb.p_value < 0.999) ++inside;
        }
        CHECK(inside >= 190);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS((void)ljung_box(std::vector<double>(20, 1.0), 10), DegenerateInput);
        CHECK_THROWS_AS((void)ljung_box(gaussian(10, 1), 10), InvalidInput);
    }
}

TEST_CASE("lo_rs") {
    SUBCASE("q = 0 is the classical rescaled range") {
        const auto x = gaussian(500, 3);
        const double n = static_cast<double>(x.size());
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= n;
        double s = 0.0, hi = 0.0, lo = 0.0, var = 0.0;
        for (double v : x) {
            s += v - mean;
            hi = std::max(hi, s);
            lo = std::min(lo, s);
            var += (v - mean) * (v - mean);
        }
        var /= n;
        const double classical = (hi - lo) / std::sqrt(var) / std::sqrt(n);
        CHECK(lo_rs(x, 0).statistic == doctest::Approx(classical).epsilon(1e-12));
    }
    SUBCASE("affine invariance") {
        const auto x = gaussian(800, 5);
        std::vector<double> z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = 3.0 + 4.0 * x[i];
        CHECK(lo_rs(z, 10).statistic == doctest::Approx(lo_rs(x, 10).statistic).epsilon(1e-12));
    }
    SUBCASE("band") {
        CHECK(kLoRsLower5 == 0.809);
        CHECK(kLoRsUpper5 == 1.862);
        std::vector<double> trend(1000);
        for (std::size_t i = 0; i < trend.size(); ++i) trend[i] = static_cast<double>(i) + std::sin(static_cast<double>(i));
        CHECK(lo_rs(trend, 10).reject_5pct);
        CHECK_THROWS_AS((void)lo_rs(std::vector<double>(50, 1.0), 3), DegenerateInput);
    }
}

TEST_CASE("FIGARCH weights and filter") {
    SUBCASE("first weights by hand") {
        // pi_1 = -d, pi_2 = -d(1-d)/2; c_k = pi_k - psi pi_{k-1} with pi_0 = 1.
        const FigarchParams p{0.1, 0.2, 0.4, 0.3};
        const auto lam = figarch_arch_weights(p, 3);
        const double pi1 = -0.4, pi2 = pi1 * (1.0 - 0.4) / 2.0, pi3 = pi2 * (2.0 - 0.4) / 3.0;
        const double l1 = -0.3 - (pi1 - 0.2);
        const double l2 = -(pi2 - 0.2 * pi1) + 0.3 * l1;
        const double l3 = -(pi3 - 0.2 * pi2) + 0.3 * l2;
        CHECK(lam[0] == doctest::Approx(l1).epsilon(1e-14));
        CHECK(lam[1] == doctest::Approx(l2).epsilon(1e-14));
        CHECK(lam[2] == doctest::Approx(l3).epsilon(1e-14));
    }
    SUBCASE("filter is continuous in d") {
        const auto y = gaussian(400, 8);
        const auto a = figarch_variance({0.1, 0.2, 0.3, 0.4}, y, 200);
        const auto b = figarch_variance({0.1, 0.2, 0.3 + 1e-6, 0.4}, y, 200);
        for (std::size_t t = 0; t < y.size(); ++t) CHECK(std::abs(a[t] - b[t]) < 1e-4);
    }
    SUBCASE("inadmissible parameters give -inf") {
        const auto y = gaussian(200, 9);
        CHECK(figarch_loglik({-0.1, 0.2, 0.3, 0.4}, y, 100) == -std::numeric_limits<double>::infinity());
        CHECK(figarch_loglik({0.1, 0.2, 1.2, 0.4}, y, 100) == -std::numeric_limits<double>::infinity());
        CHECK(std::isfinite(figarch_loglik({0.1, 0.2, 0.3, 0.4}, y, 100)));
    }
}

TEST_CASE("FIGARCH QMLE on white noise") {
    const auto y = gaussian(2000, 12);
    const auto fit = fit_figarch_qmle(y, 300);
    CHECK(std::isfinite(fit.loglik));
    CHECK(fit.params.d < 0.3);
    // Unconditional variance of the fit should match the unit variance of the data.
    CHECK(fit.params.omega / (1.0 - fit.params.beta) == doctest::Approx(1.0).epsilon(0.5));
    CHECK(fit.loglik >= figarch_loglik({0.5, 0.2, 0.2, 0.4}, y, 300));
}
