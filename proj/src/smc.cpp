#include "rech/smc.hpp"

#include "rech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rech {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTemperatureTol = 1e-6;
constexpr double kStallStep = 1e-8;

// Stream domains keep prior draws, move kernels and resampling from sharing generators.
constexpr std::uint64_t kPriorStream = 0x1;
constexpr std::uint64_t kMoveStream = 0x2ULL << 40;
constexpr std::uint64_t kResampleStream = 0x3ULL << 40;
constexpr std::uint64_t kDataMoveStream = 0x4ULL << 40;
constexpr std::uint64_t kDataResampleStream = 0x5ULL << 40;

double tempered(double loglik, double temperature) noexcept {
    if (temperature == 0.0) return 0.0;
    return temperature * loglik;
}

// Normalizes log-weights in place; returns the log of their previous sum.
double normalize_log_weights(std::vector<double>& lw) {
    const double lse = log_sum_exp(lw);
    if (lse == kNegInf || std::isnan(lse)) throw DegenerateInput("every particle weight is zero");
    for (auto& v : lw) v -= lse;
    return lse;
}

FitResult summarize(const AnnealingTarget& target, ParticleCloud cloud, std::vector<StageRecord> trace) {
    FitResult fit;
    fit.names = target.names();
    fit.posterior_mean = cloud.weighted_mean();
    fit.posterior_sd = cloud.weighted_sd();
    fit.log_ml = cloud.cum_log_ml;
    fit.final_cloud = std::move(cloud);
    fit.trace = std::move(trace);
    return fit;
}

}  // namespace

std::vector<std::string> AnnealingTarget::names() const {
    std::vector<std::string> n(dimension());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = "theta" + std::to_string(i);
    return n;
}

ModelTarget::ModelTarget(PriorSpec priors, std::span<const double> y, double sigma0_sq, FilterOptions options)
    : priors_(std::move(priors)), y_(y), sigma0_sq_(sigma0_sq), options_(options) {
    if (y_.empty()) throw InvalidInput("model target needs at least one observation");
    if (!(sigma0_sq_ > 0.0)) throw InvalidInput("initial variance must be positive");
}

double ModelTarget::log_prior(std::span<const double> theta) const noexcept { return rech::log_prior(priors_, theta); }

double ModelTarget::log_likelihood(std::span<const double> theta) const noexcept {
    return rech::log_likelihood(priors_.family, theta, y_, sigma0_sq_, options_);
}

void ModelTarget::sample_prior(std::span<double> out, Rng& rng) const { sample_prior_into(priors_, out, rng); }

void SmcConfig::validate() const {
    if (particles < 2) throw InvalidInput("SMC needs at least 2 particles");
    if (!(ess_frac > 0.0 && ess_frac < 1.0)) throw InvalidInput("ESS fraction must lie in (0, 1)");
    if (lik_moves < 1 || data_moves < 1) throw InvalidInput("Markov move counts must be at least 1");
    if (max_stages < 1) throw InvalidInput("stage cap must be at least 1");
    if (!(proposal_scale > 0.0)) throw InvalidInput("proposal scale must be positive");
}

nlohmann::json to_json(const StageRecord& rec) {
    nlohmann::json j;
    j["stage"] = rec.stage;
    j["temperature"] = rec.temperature;
    j["t"] = rec.t;
    j["ess"] = rec.ess;
    j["acceptance"] = std::isnan(rec.acceptance) ? nlohmann::json(nullptr) : nlohmann::json(rec.acceptance);
    j["cum_log_ml"] = rec.cum_log_ml;
    j["resampled"] = rec.resampled;
    j["stalled"] = rec.stalled;
    return j;
}

std::vector<double> ParticleCloud::weights() const {
    std::vector<double> w(log_weights.size());
    std::transform(log_weights.begin(), log_weights.end(), w.begin(), [](double lw) { return std::exp(lw); });
    return w;
}

std::vector<double> ParticleCloud::weighted_mean() const {
    const auto w = weights();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> mean(dim, 0.0);
    for (std::size_t j = 0; j < size(); ++j) {
        const auto r = row(j);
        for (std::size_t k = 0; k < dim; ++k) mean[k] += w[j] * r[k];
    }
    for (auto& m : mean) m /= total;
    return mean;
}

std::vector<double> ParticleCloud::weighted_sd() const {
    const auto w = weights();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const auto mean = weighted_mean();
    std::vector<double> var(dim, 0.0);
    for (std::size_t j = 0; j < size(); ++j) {
        const auto r = row(j);
        for (std::size_t k = 0; k < dim; ++k) var[k] += w[j] * (r[k] - mean[k]) * (r[k] - mean[k]);
    }
    for (auto& v : var) v = std::sqrt(std::max(v / total, 0.0));
    return var;
}

double log_sum_exp(std::span<const double> x) noexcept {
    double mx = kNegInf;
    for (double v : x) mx = std::max(mx, v);
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (double v : x) s += std::exp(v - mx);
    return mx + std::log(s);
}

double ess(std::span<const double> w) {
    double s = 0.0;
    double s2 = 0.0;
    for (double v : w) {
        if (v < 0.0) throw InvalidInput("negative particle weight");
        s += v;
        s2 += v * v;
    }
    if (!(s2 > 0.0)) throw DegenerateInput("all particle weights are zero");
    return 1.0 / s2;
}

double ess_from_log(std::span<const double> lw) noexcept {
    double mx = kNegInf;
    for (double v : lw) mx = std::max(mx, v);
    if (mx == kNegInf || std::isnan(mx)) return 0.0;
    double s = 0.0;
    double s2 = 0.0;
    for (double v : lw) {
        const double e = std::exp(v - mx);
        s += e;
        s2 += e * e;
    }
    return s * s / s2;
}

TemperatureStep adapt_next_temperature(std::span<const double> ll, std::span<const double> lw, double prev,
                                       double target_ess) {
    if (!(prev < 1.0)) throw InvalidInput("temperature already at 1");
    if (ll.size() != lw.size()) throw InvalidInput("log-likelihood and weight vectors differ in length");

    std::vector<double> buf(lw.size());
    auto ess_at = [&](double delta) {
        for (std::size_t j = 0; j < lw.size(); ++j) {
            buf[j] = delta > 0.0 ? lw[j] + delta * ll[j] : lw[j];
            if (std::isnan(buf[j])) buf[j] = kNegInf;
        }
        return ess_from_log(buf);
    };

    const double span = 1.0 - prev;
    if (ess_at(span) >= target_ess) return {1.0, false, false};
    if (ess_at(0.0) < target_ess) return {std::min(1.0, prev + kStallStep), true, true};

    // Relative tolerance: early steps can be orders of magnitude below 1e-6.
    double lo = 0.0;
    double hi = span;
    for (int iter = 0; iter < 400 && hi - lo > kTemperatureTol * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (ess_at(mid) >= target_ess) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (!(lo > 0.0)) return {std::min(1.0, prev + kStallStep), true, true};
    return {prev + lo, true, false};
}

double reweight(ParticleCloud& cloud, double delta) {
    if (delta == 0.0) return 0.0;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        const double inc = delta * cloud.cached_loglik[j];
        cloud.log_weights[j] += std::isnan(inc) ? kNegInf : inc;
    }
    const double lse = normalize_log_weights(cloud.log_weights);
    cloud.cum_log_ml += lse;
    return lse;
}

std::vector<std::size_t> resample_systematic(std::span<const double> w, Rng& rng) {
    const std::size_t m = w.size();
    if (m == 0) return {};
    const double step = 1.0 / static_cast<double>(m);
    const double u0 = std::uniform_real_distribution<double>(0.0, step)(rng);
    std::vector<std::size_t> idx(m);
    double cum = w[0];
    std::size_t i = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double u = u0 + static_cast<double>(k) * step;
        while (u >= cum && i + 1 < m) cum += w[++i];
        idx[k] = i;
    }
    return idx;
}

void apply_resample(ParticleCloud& cloud, std::span<const std::size_t> indices) {
    const std::size_t m = cloud.size();
    std::vector<double> particles(cloud.particles.size());
    std::vector<double> ll(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto src = cloud.row(indices[k]);
        std::copy(src.begin(), src.end(), particles.begin() + static_cast<std::ptrdiff_t>(k * cloud.dim));
        ll[k] = cloud.cached_loglik[indices[k]];
    }
    cloud.particles = std::move(particles);
    cloud.cached_loglik = std::move(ll);
    std::fill(cloud.log_weights.begin(), cloud.log_weights.end(), -std::log(static_cast<double>(m)));
}

Eigen::MatrixXd proposal_covariance(const ParticleCloud& cloud, double scale) {
    const auto d = static_cast<Eigen::Index>(cloud.dim);
    const auto w = cloud.weights();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const auto mean_v = cloud.weighted_mean();
    const Eigen::Map<const Eigen::VectorXd> mean(mean_v.data(), d);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        if (w[j] == 0.0) continue;
        const auto r = cloud.row(j);
        const Eigen::VectorXd diff = Eigen::Map<const Eigen::VectorXd>(r.data(), d) - mean;
        cov.noalias() += w[j] * diff * diff.transpose();
    }
    cov /= total;
    const double factor = scale * 2.38 * 2.38 / static_cast<double>(d);
    return factor * cov + 1e-10 * Eigen::MatrixXd::Identity(d, d);
}

double markov_move_rwmh(ParticleCloud& cloud, const AnnealingTarget& target, double temperature,
                        std::size_t n_moves, const Eigen::MatrixXd& proposal_cov, std::uint64_t seed,
                        std::uint64_t stream) {
    if (n_moves == 0) return kNaN;
    const auto d = static_cast<Eigen::Index>(cloud.dim);

    Eigen::MatrixXd chol_factor;
    double jitter = 0.0;
    for (int attempt = 0; attempt < 20; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(proposal_cov + jitter * Eigen::MatrixXd::Identity(d, d));
        if (llt.info() == Eigen::Success) {
            chol_factor = llt.matrixL();
            break;
        }
        jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    }
    if (chol_factor.size() == 0) throw DegenerateInput("proposal covariance is not positive definite");

    const auto m = static_cast<std::ptrdiff_t>(cloud.size());
    std::vector<std::size_t> accepted(cloud.size(), 0);

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t jj = 0; jj < m; ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        Rng rng = make_stream(seed, stream, j);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        auto row = cloud.row(j);
        Eigen::VectorXd current = Eigen::Map<const Eigen::VectorXd>(row.data(), d);
        double cur_ll = cloud.cached_loglik[j];
        double cur_lp = target.log_prior(row);
        Eigen::VectorXd z(d);
        Eigen::VectorXd proposal(d);

        for (std::size_t k = 0; k < n_moves; ++k) {
            for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
            proposal.noalias() = current + chol_factor * z;
            const double u = unif(rng);
            const std::span<const double> prop_span(proposal.data(), static_cast<std::size_t>(d));
            const double prop_lp = target.log_prior(prop_span);
            if (prop_lp == kNegInf) continue;
            const double prop_ll = temperature == 0.0 ? 0.0 : target.log_likelihood(prop_span);
            if (prop_ll == kNegInf) continue;
            const double log_ratio =
                tempered(prop_ll, temperature) + prop_lp - tempered(cur_ll, temperature) - cur_lp;
            if (std::log(u) < log_ratio) {
                current = proposal;
                cur_ll = prop_ll;
                cur_lp = prop_lp;
                ++accepted[j];
            }
        }
        std::copy(current.data(), current.data() + d, row.begin());
        cloud.cached_loglik[j] = temperature == 0.0 ? target.log_likelihood(row) : cur_ll;
    }

    const auto total = std::accumulate(accepted.begin(), accepted.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(cloud.size() * n_moves);
}

FitResult run_likelihood_annealing(const AnnealingTarget& target, const SmcConfig& config,
                                   const StageCallback& on_stage) {
    config.validate();
    const std::size_t m = config.particles;
    const std::size_t d = target.dimension();

    ParticleCloud cloud;
    cloud.dim = d;
    cloud.particles.resize(m * d);
    cloud.log_weights.assign(m, -std::log(static_cast<double>(m)));
    cloud.cached_loglik.resize(m);

    {
        const auto mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t jj = 0; jj < mm; ++jj) {
            const auto j = static_cast<std::size_t>(jj);
            Rng rng = make_stream(config.seed, kPriorStream, j);
            target.sample_prior(cloud.row(j), rng);
            cloud.cached_loglik[j] = target.log_likelihood(cloud.row(j));
        }
    }

    const double target_ess = config.ess_frac * static_cast<double>(m);
    std::vector<StageRecord> trace;
    std::size_t stage = 0;

    auto resample_and_move = [&](StageRecord& rec) {
        const Eigen::MatrixXd cov = proposal_covariance(cloud, config.proposal_scale);
        Rng rs = make_stream(config.seed, kResampleStream + stage);
        const auto idx = resample_systematic(cloud.weights(), rs);
        apply_resample(cloud, idx);
        rec.acceptance =
            markov_move_rwmh(cloud, target, cloud.temperature, config.lik_moves, cov, config.seed, kMoveStream + stage);
        rec.resampled = true;
        rec.ess = ess_from_log(cloud.log_weights);
    };

    while (cloud.temperature < 1.0) {
        if (stage >= config.max_stages) throw IncompleteAnneal(cloud.temperature, stage);
        ++stage;
        const auto step = adapt_next_temperature(cloud.cached_loglik, cloud.log_weights, cloud.temperature, target_ess);
        reweight(cloud, step.temperature - cloud.temperature);
        cloud.temperature = step.temperature;

        StageRecord rec;
        rec.stage = stage;
        rec.temperature = cloud.temperature;
        rec.stalled = step.stalled;
        rec.acceptance = kNaN;
        rec.ess = ess_from_log(cloud.log_weights);
        // A step sized by the ESS target lands on the threshold; treat it as having reached it.
        const bool at_end = cloud.temperature >= 1.0;
        if (rec.ess < target_ess || step.limited || at_end) resample_and_move(rec);
        rec.cum_log_ml = cloud.cum_log_ml;
        trace.push_back(rec);
        if (on_stage) on_stage(rec);
    }

    return summarize(target, std::move(cloud), std::move(trace));
}

FitResult run_likelihood_annealing(const PriorSpec& priors, std::span<const double> y_train, double sigma0_sq,
                                   const SmcConfig& config, const FilterOptions& options,
                                   const StageCallback& on_stage) {
    const ModelTarget target(priors, y_train, sigma0_sq, options);
    return run_likelihood_annealing(target, config, on_stage);
}

namespace {

// sigma2 for observation `upto + 1` (1-based) after filtering y[0, upto).
FilterState predictive_state(const VarianceRecursion& rec, std::span<const double> y, std::size_t upto,
                             double sigma0_sq) noexcept {
    FilterState s = rec.initial(sigma0_sq);
    for (std::size_t t = 0; t < upto; ++t) s = rec.next(s, y[t]);
    return s;
}

}  // namespace

DataAnnealingResult continue_data_annealing(ParticleCloud cloud, const PriorSpec& priors,
                                            std::span<const double> y_full, std::size_t start_t, double sigma0_sq,
                                            const SmcConfig& config, const FilterOptions& options,
                                            const StageCallback& on_stage) {
    config.validate();
    if (start_t == 0 || start_t >= y_full.size()) throw InvalidInput("data annealing needs 0 < t_in < T");
    if (cloud.dim != param_count(priors.family)) throw InvalidInput("cloud dimension does not match the model");
    const Family family = priors.family;
    const std::size_t m = cloud.size();
    const auto mm = static_cast<std::ptrdiff_t>(m);
    const double target_ess = config.ess_frac * static_cast<double>(m);

    std::vector<FilterState> pred(m);
    auto rebuild_states = [&](std::size_t upto) {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t jj = 0; jj < mm; ++jj) {
            const auto j = static_cast<std::size_t>(jj);
            const VarianceRecursion rec(family, cloud.row(j), options);
            pred[j] = predictive_state(rec, y_full, upto, sigma0_sq);
        }
    };
    rebuild_states(start_t);
    cloud.t = start_t;
    cloud.temperature = 1.0;
    cloud.cum_log_ml = 0.0;

    DataAnnealingResult out;
    out.forecasts.reserve(y_full.size() - start_t);

    for (std::size_t i = start_t; i < y_full.size(); ++i) {
        // Forecast y_{i+1} from y_{1:i} under the current posterior mean.
        ForecastStep fc;
        fc.t = i + 1;
        fc.posterior_mean = cloud.weighted_mean();
        {
            const VarianceRecursion rec(family, fc.posterior_mean, options);
            const FilterState s = predictive_state(rec, y_full, i, sigma0_sq);
            if (!admissible_variance(s.sigma2)) throw NumericalFailure(i + 1, "plug-in forecast variance");
            fc.sigma2_hat = s.sigma2;
        }
        out.forecasts.push_back(std::move(fc));

        const double y = y_full[i];
        std::vector<double> incr(m);
        for (std::size_t j = 0; j < m; ++j) {
            incr[j] = admissible_variance(pred[j].sigma2) ? gaussian_log_density(y, pred[j].sigma2) : kNegInf;
            cloud.log_weights[j] += incr[j];
            cloud.cached_loglik[j] += incr[j];
        }
        cloud.cum_log_ml += normalize_log_weights(cloud.log_weights);
        for (std::size_t j = 0; j < m; ++j) {
            if (incr[j] == kNegInf) continue;
            const VarianceRecursion rec(family, cloud.row(j), options);
            pred[j] = rec.next(pred[j], y);
        }
        cloud.t = i + 1;

        StageRecord rec;
        rec.stage = out.trace.size() + 1;
        rec.temperature = 1.0;
        rec.t = cloud.t;
        rec.acceptance = kNaN;
        rec.ess = ess_from_log(cloud.log_weights);
        if (rec.ess < target_ess) {
            const Eigen::MatrixXd cov = proposal_covariance(cloud, config.proposal_scale);
            Rng rs = make_stream(config.seed, kDataResampleStream + cloud.t);
            apply_resample(cloud, resample_systematic(cloud.weights(), rs));
            const ModelTarget window(priors, y_full.first(cloud.t), sigma0_sq, options);
            rec.acceptance =
                markov_move_rwmh(cloud, window, 1.0, config.data_moves, cov, config.seed, kDataMoveStream + cloud.t);
            rebuild_states(cloud.t);
            rec.resampled = true;
            rec.ess = ess_from_log(cloud.log_weights);
        }
        rec.cum_log_ml = cloud.cum_log_ml;
        out.trace.push_back(rec);
        if (on_stage) on_stage(rec);
    }

    out.predictive_log_ml = cloud.cum_log_ml;
    out.final_cloud = std::move(cloud);
    return out;
}

DataAnnealingResult run_data_annealing(const PriorSpec& priors, std::span<const double> y_full, std::size_t t_in,
                                       double sigma0_sq, const SmcConfig& config, const FilterOptions& options,
                                       const StageCallback& on_stage) {
    if (t_in == 0 || t_in >= y_full.size()) throw InvalidInput("data annealing needs 0 < t_in < T");
    auto fit = run_likelihood_annealing(priors, y_full.first(t_in), sigma0_sq, config, options, on_stage);
    auto out = continue_data_annealing(fit.final_cloud, priors, y_full, t_in, sigma0_sq, config, options, on_stage);
    out.in_sample = std::move(fit);
    return out;
}

BayesFactor bayes_factor(double log_ml_1, double log_ml_2) noexcept {
    const double lbf = log_ml_1 - log_ml_2;
    return {lbf, std::exp(lbf)};
}

std::string jeffreys_label(double log_bf) {
    const double a = std::abs(log_bf);
    if (a == 0.0) return "no evidence";
    const double ln10 = std::log(10.0);
    if (a < 0.5 * ln10) return "barely worth mentioning";
    if (a < ln10) return "substantial";
    if (a < 1.5 * ln10) return "strong";
    if (a < 2.0 * ln10) return "very strong";
    return "decisive";
}

void set_thread_count(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

}  // namespace rech
