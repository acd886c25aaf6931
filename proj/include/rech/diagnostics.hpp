#pragma once

#include "json.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace rech {

struct MomentSummary {
    double mean = 0.0;
    double std = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  ///< raw, normal = 3
    double min = 0.0;
    double max = 0.0;
};

/// Population-normalized moments. Constant series raise DegenerateInput.
[[nodiscard]] MomentSummary sample_moments(std::span<const double> x);

/// Regularized lower incomplete gamma P(df/2, q/2).
[[nodiscard]] double chi_squared_cdf(double q, double df);

struct LjungBox {
    double q = 0.0;
    double p_value = 1.0;
};

[[nodiscard]] LjungBox ljung_box(std::span<const double> x, std::size_t lags);

/// Sample autocorrelation at lags 1..max_lag (denominator: total sum of squares).
[[nodiscard]] std::vector<double> autocorrelations(std::span<const double> x, std::size_t max_lag);

struct LoRs {
    double statistic = 0.0;
    std::size_t q = 0;
    bool reject_5pct = false;  ///< statistic outside [0.809, 1.862]
};

inline constexpr double kLoRsLower5 = 0.809;
inline constexpr double kLoRsUpper5 = 1.862;

/// Lo's modified rescaled-range statistic with Bartlett-weighted long-run variance at lag q.
[[nodiscard]] LoRs lo_rs(std::span<const double> x, std::size_t q);

/// FIGARCH(1,d,1): sigma2_t = omega + beta sigma2_{t-1} + [1 - beta L - (1 - psi L)(1 - L)^d] y_t^2.
struct FigarchParams {
    double omega = 0.1;
    double psi = 0.2;
    double d = 0.3;
    double beta = 0.4;
};

/// Coefficients lambda_1..lambda_lag of the ARCH(infinity) form
/// sigma2_t = omega / (1 - beta) + sum_k lambda_k y_{t-k}^2.
[[nodiscard]] std::vector<double> figarch_arch_weights(const FigarchParams& p, std::size_t lag);

/// Conditional variances with presample squared returns set to their sample mean.
[[nodiscard]] std::vector<double> figarch_variance(const FigarchParams& p, std::span<const double> y,
                                                   std::size_t truncation_lag);

/// Gaussian quasi log-likelihood; -inf for inadmissible parameters or variances.
[[nodiscard]] double figarch_loglik(const FigarchParams& p, std::span<const double> y, std::size_t truncation_lag);

struct FigarchFit {
    FigarchParams params;
    double loglik = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Quasi-maximum likelihood by Nelder-Mead on transformed coordinates
/// (log omega, logit psi, logit d, logit beta) from several starting points.
[[nodiscard]] FigarchFit fit_figarch_qmle(std::span<const double> y, std::size_t truncation_lag = 1000);

[[nodiscard]] nlohmann::json to_json(const MomentSummary& m);
[[nodiscard]] nlohmann::json to_json(const LjungBox& lb);
[[nodiscard]] nlohmann::json to_json(const LoRs& rs);
[[nodiscard]] nlohmann::json to_json(const FigarchFit& fit);

}  // namespace rech
