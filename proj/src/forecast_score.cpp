#include "rech/forecast_score.hpp"

#include "rech/errors.hpp"
#include "rech/volatility_filter.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace rech {

namespace {

void require_nonempty(std::span<const ForecastRecord> records) {
    if (records.empty()) throw InvalidInput("no forecast records");
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double var_quantile(double sigma2_hat, double alpha) {
    if (!(sigma2_hat > 0.0)) throw InvalidInput("forecast variance must be positive");
    return std::sqrt(sigma2_hat) * normal_quantile(alpha);
}

std::vector<ForecastRecord> make_records(std::span<const double> sigma2_hat, std::span<const double> y, double alpha,
                                         std::size_t first_t) {
    if (sigma2_hat.size() != y.size()) throw InvalidInput("forecast and return series differ in length");
    const double z = normal_quantile(alpha);
    std::vector<ForecastRecord> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(sigma2_hat[i] > 0.0)) throw InvalidInput("forecast variance must be positive");
        out[i] = {first_t + i, sigma2_hat[i], y[i], std::sqrt(sigma2_hat[i]) * z};
    }
    return out;
}

double pps(std::span<const ForecastRecord> records) {
    require_nonempty(records);
    double s = 0.0;
    for (const auto& r : records) s -= gaussian_log_density(r.y, r.sigma2_hat);
    return s / static_cast<double>(records.size());
}

double quantile_score(std::span<const ForecastRecord> records, double alpha) {
    require_nonempty(records);
    double s = 0.0;
    for (const auto& r : records) {
        const double ind = r.y <= r.var_quantile ? 1.0 : 0.0;
        s += (alpha - ind) * (r.y - r.var_quantile);
    }
    return s / static_cast<double>(records.size());
}

ViolationSummary violations_and_hits(std::span<const ForecastRecord> records) {
    require_nonempty(records);
    const double z = normal_quantile(0.995);
    ViolationSummary v;
    std::size_t hits = 0;
    for (const auto& r : records) {
        if (std::abs(r.y) > std::sqrt(r.sigma2_hat) * z) ++v.n_violations;
        if (r.y < r.var_quantile) ++hits;
    }
    v.hit_pct = static_cast<double>(hits) / static_cast<double>(records.size());
    return v;
}

RealizedLosses realized_losses(std::span<const double> sigma2_hat, std::span<const double> proxy) {
    if (sigma2_hat.size() != proxy.size()) throw InvalidInput("forecast and proxy series differ in length");
    RealizedLosses l;
    for (std::size_t i = 0; i < proxy.size(); ++i) {
        if (!(sigma2_hat[i] > 0.0)) throw InvalidInput("forecast variance must be positive");
        if (proxy[i] < 0.0) throw InvalidInput("negative variance proxy");
        if (proxy[i] == 0.0) {
            ++l.dropped;
            continue;
        }
        const double s2 = proxy[i];
        const double f2 = sigma2_hat[i];
        const double d1 = std::sqrt(s2) - std::sqrt(f2);
        const double d2 = s2 - f2;
        const double lr = std::log(s2 / f2);
        l.mse1 += d1 * d1;
        l.mse2 += d2 * d2;
        l.mae1 += std::abs(d1);
        l.mae2 += std::abs(d2);
        l.qlike += std::log(f2) + s2 / f2;
        l.r2log += lr * lr;
        ++l.used;
    }
    if (l.used == 0) throw DegenerateInput("no positive variance proxies to score against");
    const double n = static_cast<double>(l.used);
    l.mse1 /= n;
    l.mse2 /= n;
    l.mae1 /= n;
    l.mae2 /= n;
    l.qlike /= n;
    l.r2log /= n;
    return l;
}

ScoreReport score_forecasts(std::span<const ForecastRecord> records, double alpha) {
    ScoreReport rep;
    rep.alpha = alpha;
    rep.pps = pps(records);
    rep.qs = quantile_score(records, alpha);
    const auto vh = violations_and_hits(records);
    rep.n_violations = vh.n_violations;
    rep.hit_pct = vh.hit_pct;
    return rep;
}

WinCount count_winner(std::span<const double> a, std::span<const double> b, std::span<const Better> better,
                      double target) {
    if (a.size() != b.size() || a.size() != better.size()) throw InvalidInput("score vectors differ in length");
    WinCount w;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i];
        double db = b[i];
        if (better[i] == Better::CloserToTarget) {
            da = std::abs(a[i] - target);
            db = std::abs(b[i] - target);
        }
        if (da < db) {
            ++w.a;
        } else if (db < da) {
            ++w.b;
        }
    }
    return w;
}

WinCount count_winner(const ScoreReport& a, const ScoreReport& b) {
    const double sa[] = {a.pps, static_cast<double>(a.n_violations), a.qs, a.hit_pct};
    const double sb[] = {b.pps, static_cast<double>(b.n_violations), b.qs, b.hit_pct};
    const Better dir[] = {Better::Lower, Better::Lower, Better::Lower, Better::CloserToTarget};
    return count_winner(sa, sb, dir, a.alpha);
}

nlohmann::json to_json(const RealizedLosses& l) {
    return {{"MSE1", l.mse1}, {"MSE2", l.mse2},   {"MAE1", l.mae1}, {"MAE2", l.mae2},
            {"QLIKE", l.qlike}, {"R2LOG", l.r2log}, {"used", l.used}, {"dropped", l.dropped}};
}

nlohmann::json to_json(const ScoreReport& r) {
    nlohmann::json j;
    j["alpha"] = r.alpha;
    j["PPS"] = r.pps;
    j["violations"] = r.n_violations;
    j["QS"] = r.qs;
    j["hit_pct"] = r.hit_pct;
    nlohmann::json losses = nlohmann::json::object();
    for (const auto& [name, l] : r.realized_losses) losses[name] = to_json(l);
    j["realized_losses"] = losses;
    return j;
}

void write_records_csv(const std::string& path, std::span<const ForecastRecord> records) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << "t,sigma2_hat,y,var_quantile\n";
    for (const auto& r : records) {
        out << r.t << ',' << format_number(r.sigma2_hat) << ',' << format_number(r.y) << ','
            << format_number(r.var_quantile) << '\n';
    }
}

std::vector<ForecastRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("'" + path + "' is empty");
    std::vector<ForecastRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4) {
            throw InvalidInput(path + ":" + std::to_string(line_no) + ": expected 4 columns");
        }
        ForecastRecord r;
        r.t = static_cast<std::size_t>(parse_number(cells[0]));
        r.sigma2_hat = parse_number(cells[1]);
        r.y = parse_number(cells[2]);
        r.var_quantile = parse_number(cells[3]);
        if (!(r.sigma2_hat > 0.0)) throw InvalidInput(path + ":" + std::to_string(line_no) + ": sigma2_hat <= 0");
        out.push_back(r);
    }
    return out;
}

}  // namespace rech
