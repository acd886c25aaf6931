#include "rech/volatility_filter.hpp"

#include "rech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rech {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// E|eps| for standard normal eps.
const double kMeanAbsNormal = std::sqrt(2.0 / std::numbers::pi);
constexpr double kExpInputClamp = 20.0;

double egarch_log_variance(double omega, double alpha, double beta, double gamma, double y_prev,
                           double sigma2_prev) noexcept {
    const double sd = std::sqrt(sigma2_prev);
    const double z = y_prev / sd;
    return omega + beta * std::log(sigma2_prev) + alpha * (std::abs(z) - kMeanAbsNormal) + gamma * z;
}

}  // namespace

double bounded_relu(double z, double bound) noexcept { return std::min(std::max(z, 0.0), bound); }

double srn_step(const std::array<double, 3>& v, double w, double b, const std::array<double, 3>& x, double h_prev,
                double bound) noexcept {
    const double z = v[0] * x[0] + v[1] * x[1] + v[2] * x[2] + w * h_prev + b;
    return bounded_relu(z, bound);
}

double gaussian_log_density(double y, double sigma2) noexcept {
    return -0.5 * (kLog2Pi + std::log(sigma2) + y * y / sigma2);
}

VarianceRecursion::VarianceRecursion(Family family, std::span<const double> t, FilterOptions options)
    : family_(family), options_(options) {
    if (t.size() != param_count(family)) {
        throw InvalidInput(to_string(family) + " expects " + std::to_string(param_count(family)) + " parameters");
    }
    if (!(options.activation_bound > 0.0)) throw InvalidInput("activation bound must be positive");
    switch (family) {
        case Family::GARCH: omega_ = t[0]; alpha_ = t[1]; beta_ = t[2]; break;
        case Family::GJR:
        case Family::EGARCH: omega_ = t[0]; alpha_ = t[1]; beta_ = t[2]; gamma_ = t[3]; break;
        case Family::SRN_GARCH:
            beta0_ = t[0]; beta1_ = t[1]; alpha_ = t[2]; beta_ = t[3];
            v_ = {t[4], t[5], t[6]}; w_ = t[7]; b_ = t[8];
            break;
        case Family::SRN_GJR:
            beta0_ = t[0]; beta1_ = t[1]; alpha_ = t[2]; beta_ = t[3]; gamma_ = t[4];
            v_ = {t[5], t[6], t[7]}; w_ = t[8]; b_ = t[9];
            break;
        case Family::SRN_EGARCH:
            beta0_ = t[0]; beta1_ = t[1]; omega_ = t[2]; alpha_ = t[3]; beta_ = t[4]; gamma_ = t[5];
            v_ = {t[6], t[7], t[8]}; w_ = t[9]; b_ = t[10];
            break;
    }
}

FilterState VarianceRecursion::initial(double sigma0_sq) const noexcept {
    FilterState s;
    s.sigma2 = sigma0_sq;
    s.hidden = 0.0;
    s.omega = is_recurrent(family_) ? beta0_ : 0.0;
    return s;
}

FilterState VarianceRecursion::next(const FilterState& prev, double y_prev) const noexcept {
    FilterState s;
    const double y2 = y_prev * y_prev;
    switch (family_) {
        case Family::GARCH:
            s.sigma2 = omega_ + alpha_ * y2 + beta_ * prev.sigma2;
            return s;
        case Family::GJR:
            s.sigma2 = omega_ + alpha_ * y2 + beta_ * prev.sigma2 + (y_prev < 0.0 ? gamma_ * y2 : 0.0);
            return s;
        case Family::EGARCH:
            s.sigma2 = std::exp(egarch_log_variance(omega_, alpha_, beta_, gamma_, y_prev, prev.sigma2));
            return s;
        default:
            break;
    }

    double y_in = y_prev;
    if (family_ == Family::SRN_EGARCH && options_.egarch_input == EgarchRecurrentInput::ExpReturn) {
        y_in = std::exp(std::clamp(y_prev, -kExpInputClamp, kExpInputClamp));
    }
    s.hidden = srn_step(v_, w_, b_, {prev.omega, y_in, prev.sigma2}, prev.hidden, options_.activation_bound);
    s.omega = beta0_ + beta1_ * s.hidden;

    switch (family_) {
        case Family::SRN_GARCH:
            s.sigma2 = s.omega + alpha_ * y2 + beta_ * prev.sigma2;
            break;
        case Family::SRN_GJR:
            s.sigma2 = s.omega + alpha_ * y2 + beta_ * prev.sigma2 + (y_prev < 0.0 ? gamma_ * y2 : 0.0);
            break;
        case Family::SRN_EGARCH:
            s.sigma2 = s.omega + std::exp(egarch_log_variance(omega_, alpha_, beta_, gamma_, y_prev, prev.sigma2));
            break;
        default:
            break;
    }
    return s;
}

VariancePath filter_variance(const ParamVector& theta, std::span<const double> y, double sigma0_sq,
                             const FilterOptions& options) {
    if (y.empty()) throw InvalidInput("filter_variance needs at least one observation");
    if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) throw InvalidInput("initial variance must be positive");
    const VarianceRecursion rec(theta, options);

    VariancePath path;
    path.sigma2.resize(y.size());
    path.omega.resize(y.size());
    path.hidden.resize(y.size());

    FilterState s = rec.initial(sigma0_sq);
    double ll = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (t > 0) s = rec.next(s, y[t - 1]);
        if (!admissible_variance(s.sigma2)) throw NumericalFailure(t + 1, "inadmissible conditional variance");
        path.sigma2[t] = s.sigma2;
        path.omega[t] = s.omega;
        path.hidden[t] = s.hidden;
        ll += gaussian_log_density(y[t], s.sigma2);
    }
    path.loglik = ll;
    return path;
}

double log_likelihood(Family family, std::span<const double> theta, std::span<const double> y, double sigma0_sq,
                      const FilterOptions& options) noexcept {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (y.empty() || !(sigma0_sq > 0.0)) return kNegInf;
    const VarianceRecursion rec(family, theta, options);
    FilterState s = rec.initial(sigma0_sq);
    double ll = gaussian_log_density(y[0], s.sigma2);
    for (std::size_t t = 1; t < y.size(); ++t) {
        s = rec.next(s, y[t - 1]);
        if (!admissible_variance(s.sigma2)) return kNegInf;
        ll += gaussian_log_density(y[t], s.sigma2);
    }
    return std::isnan(ll) ? kNegInf : ll;
}

double log_likelihood(const ParamVector& theta, std::span<const double> y, double sigma0_sq,
                      const FilterOptions& options) noexcept {
    return log_likelihood(theta.family, theta.values, y, sigma0_sq, options);
}

SimOutput simulate(const ParamVector& theta, std::size_t T, std::size_t burnin, double sigma_init_sq, Rng& rng,
                   const FilterOptions& options) {
    if (T == 0) throw InvalidInput("simulation length must be at least 1");
    if (!(sigma_init_sq > 0.0)) throw InvalidInput("initial variance must be positive");
    if (!satisfies_constraints(theta.family, theta.values)) {
        throw InvalidInput("parameters violate the " + to_string(theta.family) + " support constraints");
    }
    const VarianceRecursion rec(theta, options);
    std::normal_distribution<double> eps(0.0, 1.0);

    SimOutput out;
    out.y.reserve(T);
    out.sigma2.reserve(T);
    FilterState s = rec.initial(sigma_init_sq);
    double y_prev = 0.0;
    const std::size_t total = burnin + T;
    for (std::size_t t = 0; t < total; ++t) {
        if (t > 0) s = rec.next(s, y_prev);
        if (!admissible_variance(s.sigma2)) throw NumericalFailure(t + 1, "simulated variance exploded");
        y_prev = std::sqrt(s.sigma2) * eps(rng);
        if (t >= burnin) {
            out.y.push_back(y_prev);
            out.sigma2.push_back(s.sigma2);
        }
    }
    return out;
}

double sim2_variance_step(double y_prev, double sigma2_prev) noexcept {
    const double y2 = y_prev * y_prev;
    const double neg = y_prev < 0.0 ? 1.0 : 0.0;
    return 0.05 + 0.10 * y2 + 0.21 * y2 / (1.0 + y2) + 0.8 * sigma2_prev + 0.11 * sigma2_prev / (1.0 + sigma2_prev) +
           0.21 * neg * y2 + 0.1 * neg / (1.0 + std::exp(-y2));
}

SimOutput simulate_sim2(std::size_t T, std::size_t burnin, Rng& rng, double sigma_init_sq) {
    if (T == 0) throw InvalidInput("simulation length must be at least 1");
    if (!(sigma_init_sq > 0.0)) throw InvalidInput("initial variance must be positive");
    std::normal_distribution<double> eps(0.0, 1.0);
    SimOutput out;
    out.y.reserve(T);
    out.sigma2.reserve(T);
    double s2 = sigma_init_sq;
    double y_prev = 0.0;
    const std::size_t total = burnin + T;
    for (std::size_t t = 0; t < total; ++t) {
        if (t > 0) s2 = sim2_variance_step(y_prev, s2);
        if (!admissible_variance(s2)) throw NumericalFailure(t + 1, "simulated variance exploded");
        y_prev = std::sqrt(s2) * eps(rng);
        if (t >= burnin) {
            out.y.push_back(y_prev);
            out.sigma2.push_back(s2);
        }
    }
    return out;
}

double variance_bound(const ParamVector& theta, double sigma0_sq, double bound) {
    if (theta.family != Family::SRN_GARCH) throw InvalidInput("variance bound is defined for SRN_GARCH");
    const double alpha = theta.get("alpha");
    const double beta = theta.get("beta");
    if (!(alpha + beta < 1.0)) throw InvalidInput("variance bound needs alpha + beta < 1");
    const double m = theta.get("beta0") + theta.get("beta1") * bound;
    return m / (1.0 - alpha - beta) + sigma0_sq;
}

std::vector<double> standardized_residuals(const ParamVector& theta, std::span<const double> y, double sigma0_sq,
                                           const FilterOptions& options) {
    const auto path = filter_variance(theta, y, sigma0_sq, options);
    std::vector<double> r(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) r[t] = y[t] / std::sqrt(path.sigma2[t]);
    return r;
}

double sample_variance(std::span<const double> y) {
    if (y.empty()) throw InvalidInput("sample variance of an empty series");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(y.size());
    if (!(var > 0.0)) throw DegenerateInput("series has zero variance");
    return var;
}

}  // namespace rech
