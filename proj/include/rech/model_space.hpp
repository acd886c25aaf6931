#pragma once

#include "rech/rng.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rech {

/// The six supported conditional-variance models, all with (1,1) lags.
enum class Family { GARCH, GJR, EGARCH, SRN_GARCH, SRN_GJR, SRN_EGARCH };

inline constexpr std::array<Family, 6> kAllFamilies = {Family::GARCH,     Family::GJR,     Family::EGARCH,
                                                       Family::SRN_GARCH, Family::SRN_GJR, Family::SRN_EGARCH};

[[nodiscard]] std::string to_string(Family family);
/// Accepts "GARCH", "SRN_GARCH", "SRN-GARCH", case-insensitive.
[[nodiscard]] Family parse_family(std::string_view label);

[[nodiscard]] bool is_recurrent(Family family) noexcept;
/// The GARCH-type family an SRN family extends (identity for baseline families).
[[nodiscard]] Family baseline_of(Family family) noexcept;

/// Parameter names in storage order: e.g. SRN_GARCH -> beta0, beta1, alpha, beta, v0, v1, v2, w, b.
[[nodiscard]] const std::vector<std::string>& param_names(Family family);
[[nodiscard]] std::size_t param_count(Family family);

/// Named parameter values for one family.
struct ParamVector {
    Family family = Family::GARCH;
    std::vector<double> values;

    ParamVector() = default;
    ParamVector(Family f, std::vector<double> v);

    [[nodiscard]] double get(std::string_view name) const;
    void set(std::string_view name, double value);
    [[nodiscard]] bool has(std::string_view name) const;
};

/// Index of `name` in the family's storage order, or npos.
[[nodiscard]] std::size_t param_index(Family family, std::string_view name) noexcept;

/// Structural support constraints (positivity, stationarity, leverage admissibility).
[[nodiscard]] bool satisfies_constraints(Family family, std::span<const double> theta) noexcept;

struct Prior {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    double a = 0.0;  // lower bound, or mean
    double b = 1.0;  // upper bound, or variance

    static Prior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static Prior normal(double mean, double variance) { return {Kind::Normal, mean, variance}; }

    [[nodiscard]] double log_density(double x) const noexcept;
    [[nodiscard]] double draw(Rng& rng) const;
    bool operator==(const Prior&) const = default;
};

/// One prior per parameter, aligned with param_names(family).
struct PriorSpec {
    Family family = Family::GARCH;
    std::vector<Prior> priors;

    [[nodiscard]] const Prior& at(std::string_view name) const;
    Prior& at(std::string_view name);
};

[[nodiscard]] PriorSpec default_priors(Family family);

/// Sum of per-coordinate log-densities; -inf outside the prior support or the family constraints.
[[nodiscard]] double log_prior(const PriorSpec& priors, std::span<const double> theta) noexcept;
[[nodiscard]] double log_prior(const PriorSpec& priors, const ParamVector& theta) noexcept;

/// Draws `count` vectors, redrawing whole vectors until the family constraints hold.
/// When `attempts` is non-null it receives the total number of raw draws made.
[[nodiscard]] std::vector<ParamVector> sample_prior(const PriorSpec& priors, std::size_t count, Rng& rng,
                                                    std::size_t* attempts = nullptr);
void sample_prior_into(const PriorSpec& priors, std::span<double> out, Rng& rng, std::size_t* attempts = nullptr);

// JSON form: {"alpha": {"dist": "uniform", "lo": 0, "hi": 1}, "w": {"dist": "normal", "mean": 0, "var": 0.1}}
[[nodiscard]] nlohmann::json to_json(const PriorSpec& priors);
/// Starts from the family defaults and overrides the parameters named in `j`.
[[nodiscard]] PriorSpec priors_from_json(Family family, const nlohmann::json& j);

}  // namespace rech
