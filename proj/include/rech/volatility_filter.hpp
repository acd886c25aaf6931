#pragma once

#include "rech/model_space.hpp"
#include "rech/rng.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace rech {

/// Which transform of the previous return feeds the SRN_EGARCH recurrent unit.
enum class EgarchRecurrentInput {
    ExpReturn,  ///< x_t = (omega_{t-1}, exp(y_{t-1}), sigma2_{t-1}); y clamped to [-20, 20] first
    Return,     ///< x_t = (omega_{t-1}, y_{t-1}, sigma2_{t-1})
};

struct FilterOptions {
    double activation_bound = 1.0;
    EgarchRecurrentInput egarch_input = EgarchRecurrentInput::ExpReturn;
};

/// Per-step output of a variance filter. `omega` and `hidden` are zero for baseline families.
struct VariancePath {
    std::vector<double> sigma2;
    std::vector<double> omega;
    std::vector<double> hidden;
    double loglik = 0.0;
};

struct SimOutput {
    std::vector<double> y;
    std::vector<double> sigma2;
};

/// min(max(z, 0), bound)
[[nodiscard]] double bounded_relu(double z, double bound) noexcept;

/// One Elman step: bounded_relu(v.x + w*h_prev + b, bound).
[[nodiscard]] double srn_step(const std::array<double, 3>& v, double w, double b, const std::array<double, 3>& x,
                              double h_prev, double bound) noexcept;

/// Variances above this, non-finite, or nonpositive count as a numerical failure.
inline constexpr double kMaxVariance = 1e12;

[[nodiscard]] inline bool admissible_variance(double s2) noexcept { return s2 > 0.0 && s2 <= kMaxVariance; }

/// log N(y; 0, sigma2)
[[nodiscard]] double gaussian_log_density(double y, double sigma2) noexcept;

struct FilterState {
    double sigma2 = 0.0;
    double omega = 0.0;
    double hidden = 0.0;
};

/// The one-step variance map of a family with fixed parameters. Used by the batch filter, the simulator
/// and the per-particle incremental filters of data annealing.
class VarianceRecursion {
public:
    VarianceRecursion(Family family, std::span<const double> theta, FilterOptions options = {});
    explicit VarianceRecursion(const ParamVector& theta, FilterOptions options = {})
        : VarianceRecursion(theta.family, theta.values, options) {}

    /// State at t = 1: sigma2 = sigma0_sq, h = 0, omega = beta0 for SRN families.
    [[nodiscard]] FilterState initial(double sigma0_sq) const noexcept;
    /// State at t + 1 given the state at t and y_t. Does not check admissibility.
    [[nodiscard]] FilterState next(const FilterState& prev, double y_prev) const noexcept;

    [[nodiscard]] Family family() const noexcept { return family_; }

private:
    Family family_;
    FilterOptions options_;
    double omega_ = 0, alpha_ = 0, beta_ = 0, gamma_ = 0;
    double beta0_ = 0, beta1_ = 0;
    std::array<double, 3> v_{};
    double w_ = 0, b_ = 0;
};

/// Runs the recursion over y, returning every sigma2_t and the Gaussian log-likelihood.
/// Throws NumericalFailure carrying the first bad t (1-based).
[[nodiscard]] VariancePath filter_variance(const ParamVector& theta, std::span<const double> y, double sigma0_sq,
                                           const FilterOptions& options = {});

/// Same log-likelihood as filter_variance, without storing the path; -inf on numerical failure.
[[nodiscard]] double log_likelihood(Family family, std::span<const double> theta, std::span<const double> y,
                                    double sigma0_sq, const FilterOptions& options = {}) noexcept;
[[nodiscard]] double log_likelihood(const ParamVector& theta, std::span<const double> y, double sigma0_sq,
                                    const FilterOptions& options = {}) noexcept;

/// Simulates burnin + T steps from sigma2_1 = sigma_init_sq and returns the last T.
[[nodiscard]] SimOutput simulate(const ParamVector& theta, std::size_t T, std::size_t burnin, double sigma_init_sq,
                                 Rng& rng, const FilterOptions& options = {});

/// The nonlinear asymmetric variance map of the second simulation design.
[[nodiscard]] double sim2_variance_step(double y_prev, double sigma2_prev) noexcept;

[[nodiscard]] SimOutput simulate_sim2(std::size_t T, std::size_t burnin, Rng& rng, double sigma_init_sq = 0.1);

/// Upper bound on Var(y_t | sigma0^2) for SRN_GARCH with linear output map:
/// (beta0 + beta1 * bound) / (1 - alpha - beta) + sigma0_sq.
[[nodiscard]] double variance_bound(const ParamVector& theta, double sigma0_sq, double bound = 1.0);

/// y_t / sigma_t under the filtered path.
[[nodiscard]] std::vector<double> standardized_residuals(const ParamVector& theta, std::span<const double> y,
                                                         double sigma0_sq, const FilterOptions& options = {});

/// Sample variance (mean of squares about the mean) used as the default sigma0^2.
[[nodiscard]] double sample_variance(std::span<const double> y);

}  // namespace rech
