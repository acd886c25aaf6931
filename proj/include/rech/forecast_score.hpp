#pragma once

#include "rech/data_io.hpp"

#include "json.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rech {

struct ForecastRecord {
    std::size_t t = 0;
    double sigma2_hat = 0.0;
    double y = 0.0;
    double var_quantile = 0.0;
};

/// Distance losses between a variance proxy and a forecast.
struct RealizedLosses {
    double mse1 = 0.0;
    double mse2 = 0.0;
    double mae1 = 0.0;
    double mae2 = 0.0;
    double qlike = 0.0;
    double r2log = 0.0;
    std::size_t used = 0;
    std::size_t dropped = 0;  ///< pairs skipped because the proxy was zero
};

struct ScoreReport {
    double pps = 0.0;
    std::size_t n_violations = 0;
    double qs = 0.0;
    double hit_pct = 0.0;
    double alpha = 0.01;
    std::map<std::string, RealizedLosses> realized_losses;
};

/// Standard normal quantile.
[[nodiscard]] double normal_quantile(double p);

/// sqrt(sigma2_hat) * Phi^{-1}(alpha)
[[nodiscard]] double var_quantile(double sigma2_hat, double alpha);

/// Builds records with the alpha-VaR filled in.
[[nodiscard]] std::vector<ForecastRecord> make_records(std::span<const double> sigma2_hat, std::span<const double> y,
                                                       double alpha, std::size_t first_t = 1);

/// Mean negative Gaussian predictive log-density.
[[nodiscard]] double pps(std::span<const ForecastRecord> records);

/// Mean pinball loss (alpha - 1[y <= q])(y - q) of the stored VaR quantiles.
[[nodiscard]] double quantile_score(std::span<const ForecastRecord> records, double alpha);

struct ViolationSummary {
    std::size_t n_violations = 0;
    double hit_pct = 0.0;
};

/// Violations: |y| outside the central 99% interval. Hits: y strictly below the stored VaR quantile.
[[nodiscard]] ViolationSummary violations_and_hits(std::span<const ForecastRecord> records);

[[nodiscard]] RealizedLosses realized_losses(std::span<const double> sigma2_hat, std::span<const double> proxy);

[[nodiscard]] ScoreReport score_forecasts(std::span<const ForecastRecord> records, double alpha);

enum class Better { Lower, CloserToTarget };

struct WinCount {
    std::size_t a = 0;
    std::size_t b = 0;
};

/// Per-score comparison; ties count for neither side. `target` is used by CloserToTarget entries.
[[nodiscard]] WinCount count_winner(std::span<const double> scores_a, std::span<const double> scores_b,
                                    std::span<const Better> better, double target);

/// Compares PPS, #violations, QS (lower is better) and %Hit (closer to alpha is better).
[[nodiscard]] WinCount count_winner(const ScoreReport& a, const ScoreReport& b);

[[nodiscard]] nlohmann::json to_json(const RealizedLosses& losses);
[[nodiscard]] nlohmann::json to_json(const ScoreReport& report);

void write_records_csv(const std::string& path, std::span<const ForecastRecord> records);
[[nodiscard]] std::vector<ForecastRecord> read_records_csv(const std::string& path);

}  // namespace rech
