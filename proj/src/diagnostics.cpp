#include "rech/diagnostics.hpp"

#include "rech/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>

namespace rech {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

MomentSummary sample_moments(std::span<const double> x) {
    if (x.size() < 4) throw InvalidInput("moments need at least 4 observations");
    MomentSummary m;
    m.mean = mean_of(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double n = static_cast<double>(x.size());
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.min = *std::min_element(x.begin(), x.end());
    m.max = *std::max_element(x.begin(), x.end());
    m.std = std::sqrt(m2);
    if (!(m2 > 0.0)) throw DegenerateInput("constant series has no skewness or kurtosis");
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
    return m;
}

double chi_squared_cdf(double q, double df) {
    if (!(df > 0.0)) throw InvalidInput("chi-squared degrees of freedom must be positive");
    if (q <= 0.0) return 0.0;
    return boost::math::gamma_p(0.5 * df, 0.5 * q);
}

std::vector<double> autocorrelations(std::span<const double> x, std::size_t max_lag) {
    const double mu = mean_of(x);
    double denom = 0.0;
    for (double v : x) denom += (v - mu) * (v - mu);
    if (!(denom > 0.0)) throw DegenerateInput("zero-variance series has no autocorrelation");
    std::vector<double> rho(max_lag);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t t = k; t < x.size(); ++t) s += (x[t] - mu) * (x[t - k] - mu);
        rho[k - 1] = s / denom;
    }
    return rho;
}

LjungBox ljung_box(std::span<const double> x, std::size_t lags) {
    if (lags == 0 || x.size() <= lags) throw InvalidInput("Ljung-Box needs 0 < lags < length");
    const auto rho = autocorrelations(x, lags);
    const double n = static_cast<double>(x.size());
    double s = 0.0;
    for (std::size_t k = 1; k <= lags; ++k) s += rho[k - 1] * rho[k - 1] / (n - static_cast<double>(k));
    LjungBox lb;
    lb.q = n * (n + 2.0) * s;
    lb.p_value = std::clamp(1.0 - chi_squared_cdf(lb.q, static_cast<double>(lags)), 0.0, 1.0);
    return lb;
}

LoRs lo_rs(std::span<const double> x, std::size_t q) {
    if (x.size() <= q) throw InvalidInput("R/S lag must be smaller than the series length");
    const double n = static_cast<double>(x.size());
    const double mu = mean_of(x);

    double partial = 0.0;
    double hi = 0.0;
    double lo = 0.0;
    double ss = 0.0;
    for (double v : x) {
        partial += v - mu;
        hi = std::max(hi, partial);
        lo = std::min(lo, partial);
        ss += (v - mu) * (v - mu);
    }
    if (!(ss > 0.0)) throw DegenerateInput("constant series has no rescaled range");

    double long_run = ss / n;
    for (std::size_t j = 1; j <= q; ++j) {
        double acov = 0.0;
        for (std::size_t t = j; t < x.size(); ++t) acov += (x[t] - mu) * (x[t - j] - mu);
        acov /= n;
        const double weight = 1.0 - static_cast<double>(j) / static_cast<double>(q + 1);
        long_run += 2.0 * weight * acov;
    }
    if (!(long_run > 0.0)) throw DegenerateInput("nonpositive long-run variance estimate");

    LoRs out;
    out.q = q;
    out.statistic = (hi - lo) / (std::sqrt(long_run) * std::sqrt(n));
    out.reject_5pct = out.statistic < kLoRsLower5 || out.statistic > kLoRsUpper5;
    return out;
}

std::vector<double> figarch_arch_weights(const FigarchParams& p, std::size_t lag) {
    // (1 - L)^d = sum pi_k L^k;  c_k = pi_k - psi * pi_{k-1};  lambda(L) = 1 - beta L - sum c_k L^k.
    std::vector<double> weights(lag);
    double pi_prev = 1.0;
    double prev = 0.0;
    for (std::size_t k = 1; k <= lag; ++k) {
        const double pi_k = pi_prev * (static_cast<double>(k) - 1.0 - p.d) / static_cast<double>(k);
        const double c_k = pi_k - p.psi * pi_prev;
        const double lambda_k = (k == 1 ? -p.beta : 0.0) - c_k;
        prev = lambda_k + p.beta * prev;
        weights[k - 1] = prev;
        pi_prev = pi_k;
    }
    return weights;
}

std::vector<double> figarch_variance(const FigarchParams& p, std::span<const double> y, std::size_t lag) {
    const auto lambda = figarch_arch_weights(p, lag);
    std::vector<double> y2(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) y2[t] = y[t] * y[t];
    const double backcast = mean_of(y2);

    // tail[k] = sum_{i >= k} lambda_i (1-based i up to lag): presample contribution.
    std::vector<double> tail(lag + 2, 0.0);
    for (std::size_t k = lag; k >= 1; --k) tail[k] = tail[k + 1] + lambda[k - 1];

    const double constant = p.omega / (1.0 - p.beta);
    std::vector<double> s2(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        const std::size_t reach = std::min(t, lag);
        double acc = constant;
        for (std::size_t k = 1; k <= reach; ++k) acc += lambda[k - 1] * y2[t - k];
        if (reach < lag) acc += backcast * tail[reach + 1];
        s2[t] = acc;
    }
    return s2;
}

double figarch_loglik(const FigarchParams& p, std::span<const double> y, std::size_t lag) {
    if (!(p.omega > 0.0) || !(p.d > 0.0 && p.d < 1.0) || !(p.beta >= 0.0 && p.beta < 1.0)) return kNegInf;
    const auto lambda = figarch_arch_weights(p, lag);
    for (double l : lambda) {
        if (l < 0.0) return kNegInf;
    }
    const auto s2 = figarch_variance(p, y, lag);
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    double ll = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (!(s2[t] > 0.0) || !std::isfinite(s2[t])) return kNegInf;
        ll -= 0.5 * (kLog2Pi + std::log(s2[t]) + y[t] * y[t] / s2[t]);
    }
    return ll;
}

namespace {

struct QmleProblem {
    std::span<const double> y;
    std::size_t lag;
    std::size_t evaluations = 0;
};

FigarchParams from_transformed(const gsl_vector* v) {
    FigarchParams p;
    p.omega = std::exp(gsl_vector_get(v, 0));
    p.psi = logistic(gsl_vector_get(v, 1));
    p.d = logistic(gsl_vector_get(v, 2));
    p.beta = logistic(gsl_vector_get(v, 3));
    return p;
}

// Large finite penalty keeps the simplex away from inadmissible regions.
constexpr double kPenalty = 1e300;

double negative_loglik(const gsl_vector* v, void* params) {
    auto* prob = static_cast<QmleProblem*>(params);
    ++prob->evaluations;
    const double ll = figarch_loglik(from_transformed(v), prob->y, prob->lag);
    return std::isfinite(ll) ? -ll : kPenalty;
}

}  // namespace

FigarchFit fit_figarch_qmle(std::span<const double> y, std::size_t truncation_lag) {
    if (y.size() < 10) throw InvalidInput("FIGARCH QMLE needs a longer series");
    if (truncation_lag == 0) throw InvalidInput("truncation lag must be positive");

    double var = 0.0;
    for (double v : y) var += v * v;
    var /= static_cast<double>(y.size());
    if (!(var > 0.0)) throw DegenerateInput("FIGARCH QMLE on an all-zero series");

    QmleProblem prob{y, truncation_lag};
    gsl_multimin_function fn{&negative_loglik, 4, &prob};

    struct Start {
        double psi, d, beta;
    };
    constexpr std::array<Start, 3> starts{{{0.2, 0.2, 0.3}, {0.1, 0.5, 0.5}, {0.4, 0.05, 0.35}}};

    gsl_set_error_handler_off();
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4), &gsl_multimin_fminimizer_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(4), &gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(4), &gsl_vector_free);

    FigarchFit best;
    best.loglik = kNegInf;
    std::string trace;
    for (const auto& s : starts) {
        FigarchParams p0{0.0, s.psi, s.d, s.beta};
        const auto w = figarch_arch_weights(p0, truncation_lag);
        const double weight_sum = std::accumulate(w.begin(), w.end(), 0.0);
        p0.omega = std::max(0.05, 1.0 - weight_sum) * var * (1.0 - p0.beta);

        gsl_vector_set(x.get(), 0, std::log(p0.omega));
        gsl_vector_set(x.get(), 1, logit(p0.psi));
        gsl_vector_set(x.get(), 2, logit(p0.d));
        gsl_vector_set(x.get(), 3, logit(p0.beta));
        gsl_vector_set_all(step.get(), 0.5);
        gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), step.get());

        bool converged = false;
        for (int iter = 0; iter < 3000; ++iter) {
            if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
            const double size = gsl_multimin_fminimizer_size(solver.get());
            if (gsl_multimin_test_size(size, 1e-6) == GSL_SUCCESS) {
                converged = true;
                break;
            }
        }
        const double nll = gsl_multimin_fminimizer_minimum(solver.get());
        trace += "start(psi=" + std::to_string(s.psi) + ",d=" + std::to_string(s.d) + ",beta=" +
                 std::to_string(s.beta) + ") -> nll=" + std::to_string(nll) + "; ";
        if (nll < kPenalty && -nll > best.loglik) {
            best.loglik = -nll;
            best.params = from_transformed(gsl_multimin_fminimizer_x(solver.get()));
            best.converged = converged;
        }
    }
    best.evaluations = prob.evaluations;
    if (!std::isfinite(best.loglik)) throw OptimizationFailure("FIGARCH QMLE found no admissible optimum: " + trace);
    return best;
}

nlohmann::json to_json(const MomentSummary& m) {
    return {{"mean", m.mean}, {"std", m.std}, {"skewness", m.skewness},
            {"kurtosis", m.kurtosis}, {"min", m.min}, {"max", m.max}};
}

nlohmann::json to_json(const LjungBox& lb) { return {{"Q", lb.q}, {"p_value", lb.p_value}}; }

nlohmann::json to_json(const LoRs& rs) {
    return {{"q", rs.q}, {"statistic", rs.statistic}, {"reject_5pct", rs.reject_5pct}};
}

nlohmann::json to_json(const FigarchFit& fit) {
    return {{"omega", fit.params.omega}, {"psi", fit.params.psi},     {"d", fit.params.d},
            {"beta", fit.params.beta},   {"loglik", fit.loglik},      {"evaluations", fit.evaluations},
            {"converged", fit.converged}};
}

}  // namespace rech
