#pragma once

#include "rech/model_space.hpp"
#include "rech/rng.hpp"
#include "rech/volatility_filter.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rech {

/// A posterior to anneal towards: prior density, prior sampler and a likelihood.
/// Implementations must be safe to call concurrently from several threads.
class AnnealingTarget {
public:
    virtual ~AnnealingTarget() = default;
    [[nodiscard]] virtual std::size_t dimension() const = 0;
    [[nodiscard]] virtual std::vector<std::string> names() const;
    [[nodiscard]] virtual double log_prior(std::span<const double> theta) const noexcept = 0;
    /// May return -inf; never throws.
    [[nodiscard]] virtual double log_likelihood(std::span<const double> theta) const noexcept = 0;
    virtual void sample_prior(std::span<double> out, Rng& rng) const = 0;
};

/// p(y | theta) of one volatility model on a fixed data window (not owned).
class ModelTarget final : public AnnealingTarget {
public:
    ModelTarget(PriorSpec priors, std::span<const double> y, double sigma0_sq, FilterOptions options = {});

    [[nodiscard]] std::size_t dimension() const override { return priors_.priors.size(); }
    [[nodiscard]] std::vector<std::string> names() const override { return param_names(priors_.family); }
    [[nodiscard]] double log_prior(std::span<const double> theta) const noexcept override;
    [[nodiscard]] double log_likelihood(std::span<const double> theta) const noexcept override;
    void sample_prior(std::span<double> out, Rng& rng) const override;

    [[nodiscard]] Family family() const noexcept { return priors_.family; }

private:
    PriorSpec priors_;
    std::span<const double> y_;
    double sigma0_sq_;
    FilterOptions options_;
};

struct SmcConfig {
    std::size_t particles = 1000;
    double ess_frac = 0.8;
    std::size_t lik_moves = 30;
    std::size_t data_moves = 30;
    std::size_t max_stages = 10000;
    std::uint64_t seed = 0;
    double proposal_scale = 1.0;

    void validate() const;
};

struct StageRecord {
    std::size_t stage = 0;
    double temperature = 0.0;  ///< likelihood annealing
    std::size_t t = 0;         ///< data annealing: observations absorbed so far
    double ess = 0.0;
    double acceptance = 0.0;   ///< NaN when no Markov move ran
    double cum_log_ml = 0.0;
    bool resampled = false;
    bool stalled = false;      ///< temperature could not advance while keeping the ESS target
};

[[nodiscard]] nlohmann::json to_json(const StageRecord& rec);

/// M weighted particles stored row-major (particle j occupies [j*dim, (j+1)*dim)).
struct ParticleCloud {
    std::size_t dim = 0;
    std::vector<double> particles;
    std::vector<double> log_weights;     ///< normalized: log-sum-exp is 0
    std::vector<double> cached_loglik;   ///< log-likelihood of each particle on the current data window
    double temperature = 0.0;
    std::size_t t = 0;
    double cum_log_ml = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return log_weights.size(); }
    [[nodiscard]] std::span<double> row(std::size_t j) noexcept { return {particles.data() + j * dim, dim}; }
    [[nodiscard]] std::span<const double> row(std::size_t j) const noexcept {
        return {particles.data() + j * dim, dim};
    }
    [[nodiscard]] std::vector<double> weights() const;
    [[nodiscard]] std::vector<double> weighted_mean() const;
    [[nodiscard]] std::vector<double> weighted_sd() const;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> posterior_mean;
    std::vector<double> posterior_sd;
    double log_ml = 0.0;
    ParticleCloud final_cloud;
    std::vector<StageRecord> trace;
};

[[nodiscard]] double log_sum_exp(std::span<const double> x) noexcept;

/// 1 / sum W_j^2 for normalized weights. All-zero weights raise DegenerateInput.
[[nodiscard]] double ess(std::span<const double> normalized_weights);
/// ESS of the weights exp(log_weights) after normalization; 0 when every entry is -inf.
[[nodiscard]] double ess_from_log(std::span<const double> log_weights) noexcept;

struct TemperatureStep {
    double temperature = 1.0;
    bool limited = false;  ///< the ESS target, not the end of the schedule, fixed the step
    bool stalled = false;
};

/// Largest temperature in (prev, 1] whose reweighted ESS stays at or above target_ess.
[[nodiscard]] TemperatureStep adapt_next_temperature(std::span<const double> cached_loglik,
                                                     std::span<const double> log_weights, double prev,
                                                     double target_ess);

/// Adds delta * cached_loglik to the log-weights, renormalizes, and returns the log of the
/// unnormalized weight sum (the stage's marginal-likelihood factor), which is also added to cum_log_ml.
double reweight(ParticleCloud& cloud, double delta);

/// Systematic resampling: one uniform offset, M evenly spaced points.
[[nodiscard]] std::vector<std::size_t> resample_systematic(std::span<const double> normalized_weights, Rng& rng);

/// Copies the selected rows into place and sets equal weights.
void apply_resample(ParticleCloud& cloud, std::span<const std::size_t> indices);

/// scale * 2.38^2 / d * weighted covariance + 1e-10 I.
[[nodiscard]] Eigen::MatrixXd proposal_covariance(const ParticleCloud& cloud, double scale);

/// n_moves random-walk Metropolis-Hastings steps per particle targeting
/// temperature * loglik + log_prior. Particle j draws from make_stream(seed, stream, j).
/// Returns the overall acceptance rate (NaN when n_moves is 0).
double markov_move_rwmh(ParticleCloud& cloud, const AnnealingTarget& target, double temperature,
                        std::size_t n_moves, const Eigen::MatrixXd& proposal_cov, std::uint64_t seed,
                        std::uint64_t stream);

using StageCallback = std::function<void(const StageRecord&)>;

/// Adaptive likelihood-annealing SMC from the prior to the posterior.
[[nodiscard]] FitResult run_likelihood_annealing(const AnnealingTarget& target, const SmcConfig& config,
                                                 const StageCallback& on_stage = {});

[[nodiscard]] FitResult run_likelihood_annealing(const PriorSpec& priors, std::span<const double> y_train,
                                                 double sigma0_sq, const SmcConfig& config,
                                                 const FilterOptions& options = {},
                                                 const StageCallback& on_stage = {});

/// One out-of-sample step of data annealing.
struct ForecastStep {
    std::size_t t = 0;                  ///< 1-based index of the forecast observation
    std::vector<double> posterior_mean;  ///< plug-in parameters used for the forecast
    double sigma2_hat = 0.0;             ///< one-step-ahead variance from y_{1:t-1}
};

struct DataAnnealingResult {
    FitResult in_sample;
    std::vector<ForecastStep> forecasts;
    ParticleCloud final_cloud;
    std::vector<StageRecord> trace;
    double predictive_log_ml = 0.0;  ///< log p(y_{t_in+1:T} | y_{1:t_in})
};

/// Absorbs y[start_t .. end) one observation at a time starting from a cloud that targets
/// p(theta | y_{1:start_t}). Emits the plug-in forecast for each new observation before seeing it.
[[nodiscard]] DataAnnealingResult continue_data_annealing(ParticleCloud cloud, const PriorSpec& priors,
                                                          std::span<const double> y_full, std::size_t start_t,
                                                          double sigma0_sq, const SmcConfig& config,
                                                          const FilterOptions& options = {},
                                                          const StageCallback& on_stage = {});

/// Likelihood annealing on y_{1:t_in}, then data annealing over the rest of y_full.
[[nodiscard]] DataAnnealingResult run_data_annealing(const PriorSpec& priors, std::span<const double> y_full,
                                                     std::size_t t_in, double sigma0_sq, const SmcConfig& config,
                                                     const FilterOptions& options = {},
                                                     const StageCallback& on_stage = {});

struct BayesFactor {
    double log_bf = 0.0;
    double bf = 1.0;
};

[[nodiscard]] BayesFactor bayes_factor(double log_ml_1, double log_ml_2) noexcept;

/// Jeffreys' verbal scale applied to |log BF|.
[[nodiscard]] std::string jeffreys_label(double log_bf);

/// Caps the worker count used for particle-parallel work (0 = implementation default).
void set_thread_count(int threads);

}  // namespace rech
