#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rech/errors.hpp"
#include "rech/model_space.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace rech;

TEST_CASE("parameter layouts") {
    CHECK(param_count(Family::GARCH) == 3);
    CHECK(param_count(Family::GJR) == 4);
    CHECK(param_count(Family::EGARCH) == 4);
    CHECK(param_count(Family::SRN_GARCH) == 9);
    CHECK(param_count(Family::SRN_GJR) == 10);
    CHECK(param_count(Family::SRN_EGARCH) == 11);
    CHECK(param_names(Family::SRN_GARCH) ==
          std::vector<std::string>{"beta0", "beta1", "alpha", "beta", "v0", "v1", "v2", "w", "b"});
    CHECK(parse_family("srn-gjr") == Family::SRN_GJR);
    CHECK_THROWS_AS((void)parse_family("FIGARCH"), InvalidInput);
    CHECK_THROWS_AS(ParamVector(Family::GARCH, {1.0, 2.0}), InvalidInput);
}

TEST_CASE("default priors") {
    const auto garch = default_priors(Family::GARCH);
    CHECK(garch.at("omega") == Prior::uniform(0.0, 10.0));
    CHECK(garch.at("alpha") == Prior::uniform(0.0, 1.0));
    CHECK(default_priors(Family::GJR).at("gamma") == Prior::normal(0.0, 0.1));
    const auto eg = default_priors(Family::EGARCH);
    CHECK(eg.at("omega") == Prior::normal(0.0, 1.0));
    CHECK(eg.at("alpha") == Prior::normal(0.0, 1.0));
    CHECK(eg.at("beta") == Prior::uniform(0.0, 1.0));
    CHECK(default_priors(Family::SRN_GARCH).at("v1") == Prior::normal(0.0, 0.1));
    CHECK(default_priors(Family::SRN_GJR).at("beta1") == Prior::uniform(0.0, 0.5));
    const auto seg = default_priors(Family::SRN_EGARCH);
    CHECK(seg.at("omega") == Prior::normal(0.0, 1.0));
    CHECK(seg.at("gamma") == Prior::normal(0.0, 0.1));
    CHECK(seg.at("beta0") == Prior::uniform(0.0, 0.5));
}

TEST_CASE("log_prior examples") {
    const auto garch = default_priors(Family::GARCH);
    CHECK(log_prior(garch, ParamVector(Family::GARCH, {1.0, 0.5, 0.6})) == -std::numeric_limits<double>::infinity());
    CHECK(log_prior(garch, ParamVector(Family::GARCH, {5.0, 0.5, 0.4})) == doctest::Approx(-std::log(10.0)));

    // SRN_GARCH at a point where every coordinate's contribution is known in closed form.
    const auto srn = default_priors(Family::SRN_GARCH);
    const ParamVector theta(Family::SRN_GARCH, {0.1, 0.1, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0});
    const double normal_at_mode = 0.5 * std::log(1.0 / (2.0 * std::numbers::pi * 0.1));
    const double expected = 2.0 * std::log(2.0) + 0.0 + 0.0 + 5.0 * normal_at_mode;
    CHECK(log_prior(srn, theta) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log_prior is -inf exactly on constraint violations") {
    const double ninf = -std::numeric_limits<double>::infinity();
    const auto gjr = default_priors(Family::GJR);
    CHECK(log_prior(gjr, ParamVector(Family::GJR, {0.1, 0.1, 0.8, 0.05})) > ninf);
    CHECK(log_prior(gjr, ParamVector(Family::GJR, {0.1, 0.1, 0.8, 0.15})) == ninf);  // alpha+beta+gamma >= 1
    CHECK(log_prior(gjr, ParamVector(Family::GJR, {0.1, 0.05, 0.5, -0.1})) == ninf);  // alpha+gamma < 0
    CHECK(log_prior(gjr, ParamVector(Family::GJR, {0.0, 0.1, 0.5, 0.0})) == ninf);   // omega must be > 0
    const auto eg = default_priors(Family::EGARCH);
    CHECK(log_prior(eg, ParamVector(Family::EGARCH, {-3.0, 2.0, 0.99, -0.5})) > ninf);
    CHECK(log_prior(eg, ParamVector(Family::EGARCH, {0.0, 0.0, 1.0, 0.0})) == ninf);
    const auto srn = default_priors(Family::SRN_GARCH);
    CHECK(log_prior(srn, ParamVector(Family::SRN_GARCH, {0.6, 0.1, 0.1, 0.5, 0, 0, 0, 0, 0})) == ninf);
    CHECK(log_prior(srn, ParamVector(Family::SRN_GARCH, {0.1, -0.01, 0.1, 0.5, 0, 0, 0, 0, 0})) == ninf);
}

TEST_CASE("sample_prior") {
    SUBCASE("uniform omega mean within Monte Carlo tolerance") {
        Rng rng(1);
        const auto draws = sample_prior(default_priors(Family::GARCH), 1000, rng);
        double mean = 0.0;
        for (const auto& d : draws) mean += d.get("omega");
        mean /= 1000.0;
        CHECK(std::abs(mean - 5.0) < 3.0 * (10.0 / std::sqrt(12.0)) / std::sqrt(1000.0));
    }
    SUBCASE("every family, every draw finite") {
        for (auto f : kAllFamilies) {
            Rng rng(static_cast<std::uint64_t>(f) + 10);
            const auto priors = default_priors(f);
            const auto one = sample_prior(priors, 1, rng);
            REQUIRE(one.size() == 1);
            CHECK(std::isfinite(log_prior(priors, one[0])));
            for (const auto& d : sample_prior(priors, 500, rng)) CHECK(std::isfinite(log_prior(priors, d)));
        }
    }
    SUBCASE("SRN_GARCH draws satisfy alpha + beta < 1") {
        Rng rng(5);
        for (const auto& d : sample_prior(default_priors(Family::SRN_GARCH), 2000, rng)) {
            CHECK(d.get("alpha") + d.get("beta") < 1.0);
        }
    }
    SUBCASE("GARCH rejection acceptance rate near one half") {
        Rng rng(9);
        std::size_t attempts = 0;
        (void)sample_prior(default_priors(Family::GARCH), 10000, rng, &attempts);
        const double rate = 10000.0 / static_cast<double>(attempts);
        CHECK(rate >= 0.4);
        CHECK(rate <= 0.6);
    }
    SUBCASE("zero count rejected") {
        Rng rng(1);
        CHECK_THROWS_AS((void)sample_prior(default_priors(Family::GARCH), 0, rng), InvalidInput);
    }
}

TEST_CASE("prior JSON overrides") {
    const auto j = nlohmann::json::parse(R"({"omega": {"dist": "uniform", "lo": 0, "hi": 2},
                                               "gamma": {"dist": "normal", "mean": 0.1, "var": 0.5}})");
    const auto p = priors_from_json(Family::GJR, j);
    CHECK(p.at("omega") == Prior::uniform(0.0, 2.0));
    CHECK(p.at("gamma") == Prior::normal(0.1, 0.5));
    CHECK(p.at("alpha") == Prior::uniform(0.0, 1.0));
    CHECK(priors_from_json(Family::GJR, to_json(p)).priors == p.priors);
    CHECK_THROWS_AS((void)priors_from_json(Family::GARCH, nlohmann::json::parse(R"({"w": {"dist": "normal", "mean": 0, "var": 1}})")),
                    InvalidInput);
    CHECK_THROWS_AS((void)priors_from_json(Family::GARCH, nlohmann::json::parse(R"({"omega": {"dist": "uniform", "lo": 1, "hi": 1}})")),
                    InvalidInput);
}
