#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rech/errors.hpp"
#include "rech/volatility_filter.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace rech;

namespace {

double normal_logpdf(double y, double s2) {
    return std::log(1.0 / std::sqrt(2.0 * std::numbers::pi * s2)) - y * y / (2.0 * s2);
}

double direct_garch_loglik(double omega, double alpha, double beta, const std::vector<double>& y, double s0) {
    double s2 = s0, ll = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (t > 0) s2 = omega + alpha * y[t - 1] * y[t - 1] + beta * s2;
        ll += normal_logpdf(y[t], s2);
    }
    return ll;
}

std::vector<double> random_returns(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, scale);
    std::vector<double> y(n);
    for (auto& v : y) v = n01(rng);
    return y;
}

}  // namespace

TEST_CASE("bounded_relu and srn_step") {
    CHECK(bounded_relu(-3.0, 1.0) == 0.0);
    CHECK(bounded_relu(0.4, 1.0) == 0.4);
    CHECK(bounded_relu(7.0, 1.0) == 1.0);
    CHECK(srn_step({0, 0, 0}, 0, 0, {3.0, -2.0, 9.0}, 0.7, 1.0) == 0.0);
    CHECK(srn_step({1, 0, 0}, 0, 0, {0.5, 4.0, 4.0}, 0.0, 1.0) == 0.5);
    CHECK(srn_step({0, 0, 0}, 1, 0, {1.0, 1.0, 1.0}, 5.0, 1.0) == 1.0);
}

TEST_CASE("filter_variance: hand-evaluated steps") {
    SUBCASE("GARCH one step") {
        const auto p = filter_variance(ParamVector(Family::GARCH, {0.05, 0.18, 0.8}), std::vector<double>{0.5, 0.1}, 0.1);
        CHECK(p.sigma2[0] == 0.1);
        CHECK(p.sigma2[1] == doctest::Approx(0.175).epsilon(1e-14));
    }
    SUBCASE("EGARCH fixed point") {
        const auto y = random_returns(50, 7);
        const auto p = filter_variance(ParamVector(Family::EGARCH, {0.0, 0.0, 1.0, 0.0}), y, 0.37);
        for (double s : p.sigma2) CHECK(s == doctest::Approx(0.37).epsilon(1e-14));
    }
    SUBCASE("GJR adds leverage only after negative returns") {
        const ParamVector th(Family::GJR, {0.1, 0.1, 0.5, 0.2});
        const auto p = filter_variance(th, std::vector<double>{-1.0, 1.0, 0.0}, 1.0);
        CHECK(p.sigma2[1] == doctest::Approx(0.1 + 0.1 + 0.5 + 0.2));
        CHECK(p.sigma2[2] == doctest::Approx(0.1 + 0.1 + 0.5 * 0.9));
    }
    SUBCASE("SRN_GARCH recurrent component") {
        // h_2 = relu(v . (beta0, y1, s1) + b), omega_2 = beta0 + beta1 h_2.
        const ParamVector th(Family::SRN_GARCH, {0.1, 0.4, 0.1, 0.6, 1.0, 0.5, 0.0, 0.0, 0.0});
        const auto p = filter_variance(th, std::vector<double>{0.6, 0.0}, 0.5);
        const double h2 = 0.1 + 0.3;
        CHECK(p.hidden[0] == 0.0);
        CHECK(p.omega[0] == 0.1);
        CHECK(p.hidden[1] == doctest::Approx(h2));
        CHECK(p.omega[1] == doctest::Approx(0.1 + 0.4 * h2));
        CHECK(p.sigma2[1] == doctest::Approx(0.1 + 0.4 * h2 + 0.1 * 0.36 + 0.6 * 0.5));
    }
    SUBCASE("SRN_EGARCH feeds exp(y) to the recurrent unit") {
        const ParamVector th(Family::SRN_EGARCH, {0.1, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0});
        const std::vector<double> y{1.0, 0.0};
        const auto p = filter_variance(th, y, 1.0);
        CHECK(p.hidden[1] == doctest::Approx(0.2 * std::exp(1.0)));
        const auto q = filter_variance(th, y, 1.0, {1.0, EgarchRecurrentInput::Return});
        CHECK(q.hidden[1] == doctest::Approx(0.2));
        // Huge returns are clamped before exponentiation and the unit saturates instead of overflowing.
        const auto r = filter_variance(th, std::vector<double>{800.0, 0.0}, 1.0);
        CHECK(r.hidden[1] == 1.0);
    }
}

TEST_CASE("log_likelihood equals a direct sum of normal log-densities") {
    CHECK(log_likelihood(ParamVector(Family::GARCH, {0.05, 0.18, 0.8}), std::vector<double>{0.0}, 1.0) ==
          doctest::Approx(-0.918938533204673).epsilon(1e-13));
    for (auto f : kAllFamilies) {
        const std::vector<double> y1{0.0};
        Rng rng(3);
        const auto th = sample_prior(default_priors(f), 1, rng)[0];
        CHECK(log_likelihood(th, y1, 1.0) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    }
    for (std::size_t T = 1; T <= 5; ++T) {
        const auto y = random_returns(T, 100 + T, 1.3);
        const double ll = log_likelihood(ParamVector(Family::GARCH, {0.05, 0.18, 0.8}), y, 0.7);
        CHECK(std::abs(ll - direct_garch_loglik(0.05, 0.18, 0.8, y, 0.7)) < 1e-12);
    }
}

TEST_CASE("log_likelihood returns -inf on overflow instead of throwing") {
    std::vector<double> y(400, 1e7);
    const ParamVector th(Family::GARCH, {0.5, 0.5, 0.4999});
    CHECK(log_likelihood(th, y, 1.0) == -std::numeric_limits<double>::infinity());
    try {
        (void)filter_variance(th, y, 1.0);
        FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
        CHECK(e.t() >= 2);
    }
}

TEST_CASE("nesting: zero recurrent part reproduces the baseline family bit for bit") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const auto y = random_returns(300, 500 + rep, 0.5 + 2.0 * u(rng));
        const double s0 = 0.2 + u(rng);
        const double beta0 = 0.01 + 0.49 * u(rng);
        const double a = 0.3 * u(rng), b = 0.6 * u(rng), g = 0.05 * u(rng);

        const auto garch = filter_variance(ParamVector(Family::GARCH, {beta0, a, b}), y, s0);
        const auto srn_garch = filter_variance(ParamVector(Family::SRN_GARCH, {beta0, 0, a, b, 0, 0, 0, 0, 0}), y, s0);
        CHECK(garch.sigma2 == srn_garch.sigma2);

        const auto gjr = filter_variance(ParamVector(Family::GJR, {beta0, a, b, g}), y, s0);
        const auto srn_gjr = filter_variance(ParamVector(Family::SRN_GJR, {beta0, 0, a, b, g, 0, 0, 0, 0, 0}), y, s0);
        CHECK(gjr.sigma2 == srn_gjr.sigma2);

        // SRN_EGARCH adds omega_t = beta0 outside the exponential; compare against that oracle directly.
        const double eo = -0.5 + u(rng), ea = 0.3 * u(rng), eb = 0.9 * u(rng), eg = -0.1 + 0.2 * u(rng);
        const auto srn_eg = filter_variance(ParamVector(Family::SRN_EGARCH, {beta0, 0, eo, ea, eb, eg, 0, 0, 0, 0, 0}), y, s0);
        double s2 = s0;
        for (std::size_t t = 0; t < y.size(); ++t) {
            if (t > 0) {
                const double z = y[t - 1] / std::sqrt(s2);
                s2 = beta0 + std::exp(eo + eb * std::log(s2) + ea * (std::abs(z) - std::sqrt(2.0 / std::numbers::pi)) + eg * z);
            }
            CHECK(std::abs(srn_eg.sigma2[t] - s2) <= 1e-12 * s2);
        }
    }
}

TEST_CASE("EGARCH positivity for returns up to 50 in magnitude") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> ret(-50.0, 50.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double alpha = 0.3 * u(rng);
        const ParamVector th(Family::EGARCH, {-0.5 + u(rng), alpha, 0.95 * u(rng), alpha * (2.0 * u(rng) - 1.0)});
        VarianceRecursion rec(th);
        FilterState st = rec.initial(1.0);
        for (int t = 0; t < 300; ++t) {
            st = rec.next(st, ret(rng));
            // A tiny variance can turn |y| <= 50 into an overflowing shock; it never turns nonpositive.
            CHECK(st.sigma2 > 0.0);
            if (!std::isfinite(st.sigma2)) break;
        }
    }
}

TEST_CASE("simulate") {
    SUBCASE("SIM I average sample variance matches the exact expectation") {
        // E sigma2_t = omega + (alpha + beta) E sigma2_{t-1}, started from sigma2_1 = 0.1.
        double expected = 0.0, e = 0.1;
        for (int t = 0; t < 2000; ++t) {
            expected += e / 2000.0;
            e = 0.05 + 0.98 * e;
        }
        constexpr int kSeeds = 200;
        double mean = 0.0, sq = 0.0;
        for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
            Rng rng(seed);
            const auto out = simulate(ParamVector(Family::GARCH, {0.05, 0.18, 0.8}), 2000, 0, 0.1, rng);
            REQUIRE(out.y.size() == 2000);
            double ss = 0.0;
            for (double v : out.y) ss += v * v;
            mean += ss / 2000.0 / kSeeds;
            sq += (ss / 2000.0) * (ss / 2000.0) / kSeeds;
        }
        const double se = std::sqrt((sq - mean * mean) / kSeeds);
        CHECK(std::abs(mean - expected) < 4.0 * se);
        CHECK(expected == doctest::Approx(2.5).epsilon(0.06));
    }
    SUBCASE("determinism") {
        Rng a(77), b(77);
        const ParamVector th(Family::SRN_GARCH, {0.068, 0.418, 0.058, 0.681, -0.018, -0.430, 0.524, 0.161, -0.173});
        const auto x = simulate(th, 500, 100, 0.1, a);
        const auto z = simulate(th, 500, 100, 0.1, b);
        CHECK(x.y == z.y);
        CHECK(x.sigma2 == z.sigma2);
    }
    SUBCASE("alpha = beta = 0 gives i.i.d. N(0,1)") {
        Rng rng(4);
        const auto out = simulate(ParamVector(Family::GARCH, {1.0, 0.0, 0.0}), 5000, 0, 1.0, rng);
        for (double s : out.sigma2) CHECK(s == 1.0);
        double m = 0.0, ss = 0.0;
        for (double v : out.y) {
            m += v;
            ss += v * v;
        }
        CHECK(std::abs(m / 5000.0) < 4.0 / std::sqrt(5000.0));
        CHECK(std::abs(ss / 5000.0 - 1.0) < 4.0 * std::sqrt(2.0 / 5000.0));
    }
    SUBCASE("out-of-support parameters rejected") {
        Rng rng(1);
        CHECK_THROWS_AS((void)simulate(ParamVector(Family::GARCH, {0.05, 0.5, 0.6}), 10, 0, 0.1, rng), InvalidInput);
    }
    SUBCASE("sigma2 column matches the filter applied to the simulated returns") {
        Rng rng(12);
        const ParamVector th(Family::GJR, {0.05, 0.05, 0.8, 0.1});
        const auto out = simulate(th, 300, 0, 0.4, rng);
        const auto p = filter_variance(th, out.y, 0.4);
        CHECK(p.sigma2 == out.sigma2);
    }
}

TEST_CASE("simulate_sim2") {
    CHECK(sim2_variance_step(0.0, 1.0) == doctest::Approx(0.905).epsilon(1e-14));
    CHECK(sim2_variance_step(-1.0, 0.0) == doctest::Approx(0.05 + 0.10 + 0.105 + 0.21 + 0.1 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(sim2_variance_step(-1.0, 0.0) == doctest::Approx(0.53808).epsilon(1e-4));

    Rng rng(21);
    const auto out = simulate_sim2(2000, 0, rng);
    std::vector<double> y2(out.y.size());
    for (std::size_t i = 0; i < y2.size(); ++i) y2[i] = out.y[i] * out.y[i];
    double m = 0.0;
    for (double v : y2) m += v;
    m /= static_cast<double>(y2.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y2.size(); ++i) {
        den += (y2[i] - m) * (y2[i] - m);
        if (i > 0) num += (y2[i] - m) * (y2[i - 1] - m);
    }
    CHECK(num / den > 0.2);
}

TEST_CASE("variance_bound") {
    const ParamVector theta1(Family::SRN_GARCH, {0.068, 0.418, 0.058, 0.681, -0.018, -0.430, 0.524, 0.161, -0.173});
    CHECK(variance_bound(theta1, 0.0) == doctest::Approx(0.486 / 0.261).epsilon(1e-12));
    CHECK(variance_bound(theta1, 0.0) == doctest::Approx(1.8621).epsilon(1e-4));
    const ParamVector nested(Family::SRN_GARCH, {0.05, 0.0, 0.18, 0.8, 0, 0, 0, 0, 0});
    CHECK(variance_bound(nested, 0.3) == doctest::Approx(0.05 / 0.02 + 0.3));
    const ParamVector flat(Family::SRN_GARCH, {0.5, 0.5, 0.0, 0.0, 0, 0, 0, 0, 0});
    CHECK(variance_bound(flat, 1.0) == doctest::Approx(2.0));
    const ParamVector bad(Family::SRN_GARCH, {0.1, 0.1, 0.5, 0.5, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS((void)variance_bound(bad, 1.0), InvalidInput);
}

TEST_CASE("SIM III theta_1 simulation keeps the mean variance under the bound") {
    const ParamVector theta1(Family::SRN_GARCH, {0.068, 0.418, 0.058, 0.681, -0.018, -0.430, 0.524, 0.161, -0.173});
    const double s0 = 0.1;
    const double bound = variance_bound(theta1, s0);
    constexpr std::size_t kPaths = 200, kT = 500;
    std::vector<double> mean(kT, 0.0);
    for (std::size_t p = 0; p < kPaths; ++p) {
        Rng rng(1000 + p);
        const auto out = simulate(theta1, kT, 0, s0, rng);
        for (std::size_t t = 0; t < kT; ++t) mean[t] += out.sigma2[t] / kPaths;
    }
    for (double m : mean) CHECK(m <= bound);
}

TEST_CASE("standardized_residuals") {
    const ParamVector unit(Family::GARCH, {1.0, 0.0, 0.0});
    const std::vector<double> y{0.3, -1.2, 2.0};
    CHECK(standardized_residuals(unit, y, 1.0) == y);
    const std::vector<double> zeros(10, 0.0);
    for (double r : standardized_residuals(ParamVector(Family::GARCH, {0.05, 0.18, 0.8}), zeros, 1.0)) CHECK(r == 0.0);
    CHECK(sample_variance(std::vector<double>{1.0, -1.0}) == 1.0);
    CHECK_THROWS_AS((void)sample_variance(std::vector<double>{2.0, 2.0}), DegenerateInput);
}
