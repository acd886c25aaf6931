#include "CLI11.hpp"
#include "json.hpp"

#include "rech/data_io.hpp"
#include "rech/diagnostics.hpp"
#include "rech/errors.hpp"
#include "rech/forecast_score.hpp"
#include "rech/model_space.hpp"
#include "rech/smc.hpp"
#include "rech/volatility_filter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rech;

namespace {

enum ExitCode { kOk = 0, kNumerical = 1, kUsage = 2 };

struct RunConfig {
    std::string model = "GARCH";
    std::string data;
    std::string data_kind = "auto";
    std::vector<std::string> realized;
    std::optional<std::size_t> t_in;
    SmcConfig smc;
    std::optional<double> sigma0_sq;
    json priors = json::object();
    FilterOptions filter;
    std::string out = ".";
    int threads = 0;

    std::string dgp = "SIM1";
    std::optional<std::size_t> T;
    std::optional<std::size_t> burnin;
    std::vector<double> theta;
    double sigma_init_sq = 0.1;

    std::vector<std::string> forecasts;
    std::string truth;
    double alpha = 0.01;

    std::size_t lb_lags = 10;
    std::vector<std::size_t> rs_lags{10, 20, 30};
    bool figarch = false;
    std::size_t figarch_lag = 1000;

    std::vector<std::string> reports;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::string egarch_input_label(EgarchRecurrentInput in) {
    return in == EgarchRecurrentInput::ExpReturn ? "exp_return" : "return";
}

EgarchRecurrentInput parse_egarch_input(const std::string& s) {
    const auto l = lower(s);
    if (l == "exp_return") return EgarchRecurrentInput::ExpReturn;
    if (l == "return") return EgarchRecurrentInput::Return;
    throw InvalidInput("egarch_input must be 'exp_return' or 'return', got '" + s + "'");
}

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidInput(std::string("config key '") + key + "' has the wrong type");
    }
}

void apply_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidInput("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw InvalidInput("config file " + path + " must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        const char* k = key.c_str();
        if (key == "model") c.model = get_as<std::string>(j, k);
        else if (key == "data") c.data = get_as<std::string>(j, k);
        else if (key == "data_kind") c.data_kind = get_as<std::string>(j, k);
        else if (key == "realized") c.realized = get_as<std::vector<std::string>>(j, k);
        else if (key == "t_in") c.t_in = get_as<std::size_t>(j, k);
        else if (key == "particles") c.smc.particles = get_as<std::size_t>(j, k);
        else if (key == "ess_frac") c.smc.ess_frac = get_as<double>(j, k);
        else if (key == "moves") c.smc.lik_moves = c.smc.data_moves = get_as<std::size_t>(j, k);
        else if (key == "lik_moves") c.smc.lik_moves = get_as<std::size_t>(j, k);
        else if (key == "data_moves") c.smc.data_moves = get_as<std::size_t>(j, k);
        else if (key == "max_stages") c.smc.max_stages = get_as<std::size_t>(j, k);
        else if (key == "proposal_scale") c.smc.proposal_scale = get_as<double>(j, k);
        else if (key == "seed") c.smc.seed = get_as<std::uint64_t>(j, k);
        else if (key == "sigma0_sq") {
            if (!value.is_null()) c.sigma0_sq = get_as<double>(j, k);
        } else if (key == "priors") c.priors = value;
        else if (key == "activation_bound") c.filter.activation_bound = get_as<double>(j, k);
        else if (key == "egarch_input") c.filter.egarch_input = parse_egarch_input(get_as<std::string>(j, k));
        else if (key == "out") c.out = get_as<std::string>(j, k);
        else if (key == "threads") c.threads = get_as<int>(j, k);
        else if (key == "dgp") c.dgp = get_as<std::string>(j, k);
        else if (key == "T") c.T = get_as<std::size_t>(j, k);
        else if (key == "burnin") c.burnin = get_as<std::size_t>(j, k);
        else if (key == "theta") c.theta = get_as<std::vector<double>>(j, k);
        else if (key == "sigma_init_sq") c.sigma_init_sq = get_as<double>(j, k);
        else if (key == "forecasts") c.forecasts = get_as<std::vector<std::string>>(j, k);
        else if (key == "truth") c.truth = get_as<std::string>(j, k);
        else if (key == "alpha") c.alpha = get_as<double>(j, k);
        else if (key == "lb_lags") c.lb_lags = get_as<std::size_t>(j, k);
        else if (key == "rs_lags") c.rs_lags = get_as<std::vector<std::size_t>>(j, k);
        else if (key == "figarch") c.figarch = get_as<bool>(j, k);
        else if (key == "figarch_lag") c.figarch_lag = get_as<std::size_t>(j, k);
        else if (key == "reports") c.reports = get_as<std::vector<std::string>>(j, k);
        else throw InvalidInput("unknown config key '" + key + "' in " + path);
    }
}

// Raw flag values; only the flags actually given override the config file.
struct Flags {
    std::string config, model, data, out, dgp, truth, theta, data_kind, priors;
    std::vector<std::string> realized, forecasts, reports;
    std::size_t t_in = 0, particles = 0, moves = 0, T = 0, burnin = 0;
    double ess_frac = 0.0, sigma0_sq = 0.0, alpha = 0.0;
    std::uint64_t seed = 0;
    int threads = 0;
    bool figarch = false;
};

struct CommandOptions {
    CLI::App* app = nullptr;
    std::map<std::string, CLI::Option*> opts;
    [[nodiscard]] bool given(const std::string& name) const {
        const auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void add_common(CommandOptions& c, Flags& f) {
    auto* a = c.app;
    c.opts["config"] = a->add_option("--config", f.config, "JSON config file; flags override its values");
    c.opts["out"] = a->add_option("--out", f.out, "Output directory (created if missing)");
    c.opts["seed"] = a->add_option("--seed", f.seed, "Random seed");
    c.opts["threads"] = a->add_option("--threads", f.threads, "Worker thread cap (0 = default); never changes results");
}

void add_smc(CommandOptions& c, Flags& f) {
    auto* a = c.app;
    c.opts["model"] = a->add_option("--model", f.model, "GARCH, GJR, EGARCH, SRN_GARCH, SRN_GJR or SRN_EGARCH");
    c.opts["data"] = a->add_option("--data", f.data, "CSV of returns (date,value) or prices (date,price)");
    c.opts["data-kind"] = a->add_option("--data-kind", f.data_kind, "auto, returns or prices");
    c.opts["t-in"] = a->add_option("--t-in", f.t_in, "In-sample length");
    c.opts["particles"] = a->add_option("--particles", f.particles, "Number of particles M");
    c.opts["ess-frac"] = a->add_option("--ess-frac", f.ess_frac, "ESS threshold fraction c");
    c.opts["moves"] = a->add_option("--moves", f.moves, "Metropolis-Hastings moves per stage (both samplers)");
    c.opts["sigma0-sq"] = a->add_option("--sigma0-sq", f.sigma0_sq, "Initial variance (default: in-sample variance)");
}

RunConfig resolve(const CommandOptions& c, const Flags& f) {
    RunConfig r;
    if (c.given("config")) apply_config_file(r, f.config);
    if (c.given("out")) r.out = f.out;
    if (c.given("seed")) r.smc.seed = f.seed;
    if (c.given("threads")) r.threads = f.threads;
    if (c.given("model")) r.model = f.model;
    if (c.given("data")) r.data = f.data;
    if (c.given("data-kind")) r.data_kind = f.data_kind;
    if (c.given("realized")) r.realized = f.realized;
    if (c.given("t-in")) r.t_in = f.t_in;
    if (c.given("particles")) r.smc.particles = f.particles;
    if (c.given("ess-frac")) r.smc.ess_frac = f.ess_frac;
    if (c.given("moves")) r.smc.lik_moves = r.smc.data_moves = f.moves;
    if (c.given("sigma0-sq")) r.sigma0_sq = f.sigma0_sq;
    if (c.given("dgp")) r.dgp = f.dgp;
    if (c.given("T")) r.T = f.T;
    if (c.given("burnin")) r.burnin = f.burnin;
    if (c.given("theta")) {
        r.theta.clear();
        std::stringstream ss(f.theta);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.theta.push_back(parse_number(cell));
    }
    if (c.given("forecasts")) r.forecasts = f.forecasts;
    if (c.given("truth")) r.truth = f.truth;
    if (c.given("alpha")) r.alpha = f.alpha;
    if (c.given("figarch")) r.figarch = f.figarch;
    if (c.given("reports")) r.reports = f.reports;
    if (r.threads < 0) throw InvalidInput("--threads must be nonnegative");
    return r;
}

json smc_config_json(const RunConfig& c) {
    return {{"particles", c.smc.particles},   {"ess_frac", c.smc.ess_frac},
            {"lik_moves", c.smc.lik_moves},   {"data_moves", c.smc.data_moves},
            {"max_stages", c.smc.max_stages}, {"proposal_scale", c.smc.proposal_scale},
            {"seed", c.smc.seed}};
}

// Output directory and thread count are left out so that reports compare equal across runs.
json model_config_json(const RunConfig& c, const PriorSpec& priors) {
    json j = smc_config_json(c);
    j["model"] = to_string(priors.family);
    j["data"] = c.data;
    j["data_kind"] = c.data_kind;
    j["t_in"] = c.t_in ? json(*c.t_in) : json(nullptr);
    j["sigma0_sq"] = c.sigma0_sq ? json(*c.sigma0_sq) : json(nullptr);
    j["priors"] = to_json(priors);
    j["activation_bound"] = c.filter.activation_bound;
    j["egarch_input"] = egarch_input_label(c.filter.egarch_input);
    j["realized"] = c.realized;
    return j;
}

fs::path prepare_out(const RunConfig& c) {
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + c.out);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string csv_header_value_name(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::string line;
    std::getline(in, line);
    const auto comma = line.find(',');
    if (comma == std::string::npos) return {};
    auto name = lower(line.substr(comma + 1));
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
    return name;
}

ReturnSeries load_returns(const RunConfig& c) {
    if (c.data.empty()) throw InvalidInput("--data is required");
    if (!fs::exists(c.data)) throw InvalidInput("data file not found: " + c.data);
    std::string kind = lower(c.data_kind);
    if (kind == "auto") {
        const auto name = csv_header_value_name(c.data);
        kind = (name == "price" || name == "prices" || name == "close" || name == "adj_close") ? "prices" : "returns";
    }
    if (kind == "prices") return demean_log_returns(read_prices_csv(c.data));
    if (kind == "returns") return read_returns_csv(c.data);
    throw InvalidInput("data_kind must be auto, returns or prices");
}

class TraceWriter {
public:
    explicit TraceWriter(const fs::path& path) : out_(path) {
        if (!out_) throw InvalidInput("cannot write " + path.string());
    }
    StageCallback callback() {
        return [this](const StageRecord& rec) { out_ << to_json(rec).dump() << '\n'; };
    }

private:
    std::ofstream out_;
};

json parameter_table(const std::vector<std::string>& names, const std::vector<double>& mean,
                     const std::vector<double>& sd) {
    json arr = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) arr.push_back({{"name", names[i]}, {"mean", mean[i]}, {"sd", sd[i]}});
    return arr;
}

void warn(json& warnings, const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
    warnings.push_back(msg);
}

json residual_diagnostics(std::span<const double> resid, std::size_t lb_lags) {
    std::vector<double> sq(resid.size());
    for (std::size_t i = 0; i < resid.size(); ++i) sq[i] = resid[i] * resid[i];
    json j;
    j["moments"] = to_json(sample_moments(resid));
    j["ljung_box"] = to_json(ljung_box(resid, lb_lags));
    j["ljung_box_squared"] = to_json(ljung_box(sq, lb_lags));
    j["lags"] = lb_lags;
    return j;
}

void write_columns(const fs::path& path, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& cols, std::size_t first_t) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "t";
    for (const auto& h : header) out << ',' << h;
    out << '\n';
    const std::size_t n = cols.empty() ? 0 : cols[0].size();
    for (std::size_t i = 0; i < n; ++i) {
        out << first_t + i;
        for (const auto& c : cols) out << ',' << format_number(c[i]);
        out << '\n';
    }
}

int cmd_fit(const RunConfig& c) {
    const Family family = parse_family(c.model);
    const PriorSpec priors = priors_from_json(family, c.priors);
    const ReturnSeries y = load_returns(c);
    const std::size_t n = c.t_in.value_or(y.size());
    if (n == 0 || n > y.size()) throw InvalidInput("t_in must lie in [1, " + std::to_string(y.size()) + "]");
    const std::span<const double> train = std::span<const double>(y.values).first(n);
    const double s0 = c.sigma0_sq.value_or(sample_variance(train));
    const auto dir = prepare_out(c);
    const std::string tag = to_string(family);

    TraceWriter trace(dir / ("trace_fit_" + tag + ".jsonl"));
    const FitResult fit = run_likelihood_annealing(priors, train, s0, c.smc, c.filter, trace.callback());

    json report;
    json warnings = json::array();
    report["command"] = "fit";
    report["config"] = model_config_json(c, priors);
    report["model"] = tag;
    report["n_obs"] = n;
    report["sigma0_sq"] = s0;
    report["parameters"] = parameter_table(fit.names, fit.posterior_mean, fit.posterior_sd);
    report["log_ml"] = fit.log_ml;
    report["stages"] = fit.trace.size();
    std::size_t stalled = 0;
    for (const auto& r : fit.trace) stalled += r.stalled ? 1 : 0;
    if (stalled > 0) warn(warnings, std::to_string(stalled) + " annealing stages could not keep the ESS target");

    const ParamVector theta(family, fit.posterior_mean);
    try {
        const VariancePath path = filter_variance(theta, train, s0, c.filter);
        write_columns(dir / ("variance_fit_" + tag + ".csv"), {"sigma2", "omega"}, {path.sigma2, path.omega}, 1);
        const auto resid = standardized_residuals(theta, train, s0, c.filter);
        report["plug_in_loglik"] = path.loglik;
        report["residual_diagnostics"] = residual_diagnostics(resid, c.lb_lags);
    } catch (const Error& e) {
        warn(warnings, std::string("posterior-mean variance path unavailable: ") + e.what());
    }
    report["warnings"] = warnings;
    write_json(dir / ("fit_" + tag + ".json"), report);
    return kOk;
}

struct RealizedInput {
    std::string label;
    std::string path;
};

RealizedInput parse_realized_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {"RV", arg};
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

// Realized measure aligned to the forecast records: either one value per record or one per observation.
std::vector<double> aligned_proxy(const std::vector<double>& values, const std::vector<ForecastRecord>& recs,
                                  const std::string& what) {
    if (values.size() == recs.size()) return values;
    std::vector<double> out;
    out.reserve(recs.size());
    for (const auto& r : recs) {
        if (r.t == 0 || r.t > values.size()) {
            throw InvalidInput(what + " has " + std::to_string(values.size()) + " rows; expected " +
                               std::to_string(recs.size()) + " or at least " + std::to_string(recs.back().t));
        }
        out.push_back(values[r.t - 1]);
    }
    return out;
}

json realized_section(const std::vector<std::string>& realized, const std::vector<ForecastRecord>& recs,
                      std::map<std::string, RealizedLosses>* losses_out) {
    json j = json::object();
    std::vector<double> s2, ytest;
    for (const auto& r : recs) {
        s2.push_back(r.sigma2_hat);
        ytest.push_back(r.y);
    }
    for (const auto& arg : realized) {
        const auto in = parse_realized_arg(arg);
        const RealizedKind kind = parse_realized_kind(in.label);
        if (!fs::exists(in.path)) throw InvalidInput("realized measure file not found: " + in.path);
        RealizedSeries rv = read_realized_csv(in.path, kind);
        rv.values = aligned_proxy(rv.values, recs, in.path);
        const RealizedSeries scaled = scale_realized_measure(rv, ytest);
        const RealizedLosses l = realized_losses(s2, scaled.values);
        if (l.dropped > 0) std::cerr << "warning: " << l.dropped << " zero entries dropped from " << in.path << '\n';
        j[to_string(kind)] = to_json(l);
        if (losses_out) (*losses_out)[to_string(kind)] = l;
    }
    return j;
}

int cmd_forecast(const RunConfig& c) {
    const Family family = parse_family(c.model);
    const PriorSpec priors = priors_from_json(family, c.priors);
    if (!c.t_in) throw InvalidInput("forecast needs --t-in");
    const ReturnSeries y = split(load_returns(c), *c.t_in);
    const double s0 = c.sigma0_sq.value_or(sample_variance(y.train()));
    const auto dir = prepare_out(c);
    const std::string tag = to_string(family);

    TraceWriter trace(dir / ("trace_forecast_" + tag + ".jsonl"));
    const DataAnnealingResult res = run_data_annealing(priors, y.values, y.t_in, s0, c.smc, c.filter, trace.callback());

    std::vector<double> s2;
    s2.reserve(res.forecasts.size());
    for (const auto& f : res.forecasts) s2.push_back(f.sigma2_hat);
    const auto recs = make_records(s2, y.test(), c.alpha, y.t_in + 1);
    write_records_csv((dir / ("forecast_" + tag + ".csv")).string(), recs);

    std::vector<std::vector<double>> param_cols(param_count(family));
    for (const auto& f : res.forecasts) {
        for (std::size_t i = 0; i < f.posterior_mean.size(); ++i) param_cols[i].push_back(f.posterior_mean[i]);
    }
    write_columns(dir / ("forecast_params_" + tag + ".csv"), param_names(family), param_cols, y.t_in + 1);

    ScoreReport score = score_forecasts(recs, c.alpha);
    json report;
    report["command"] = "forecast";
    report["config"] = model_config_json(c, priors);
    report["config"]["alpha"] = c.alpha;
    report["model"] = tag;
    report["t_in"] = y.t_in;
    report["t_out"] = y.t_out;
    report["sigma0_sq"] = s0;
    report["in_sample_log_ml"] = res.in_sample.log_ml;
    report["log_ml"] = res.in_sample.log_ml;
    report["predictive_log_ml"] = res.predictive_log_ml;
    report["in_sample_parameters"] =
        parameter_table(res.in_sample.names, res.in_sample.posterior_mean, res.in_sample.posterior_sd);
    report["final_parameters"] =
        parameter_table(res.in_sample.names, res.final_cloud.weighted_mean(), res.final_cloud.weighted_sd());
    report["scores"] = to_json(score);
    report["scores"]["realized_losses"] = realized_section(c.realized, recs, nullptr);
    report["data_annealing_stages"] = res.trace.size();
    write_json(dir / ("forecast_" + tag + ".json"), report);
    return kOk;
}

struct Dgp {
    std::string label;
    std::optional<ParamVector> theta;  // empty for SIM2
    std::size_t default_T = 2000;
    std::size_t default_burnin = 0;
};

ParamVector sim3_theta(int which, bool null_beta1) {
    // alpha, beta, beta0, beta1, v0, v1, v2, w, b as tabulated for the four fitted datasets.
    static const double table[4][9] = {
        {0.058, 0.681, 0.068, 0.418, -0.018, -0.430, 0.524, 0.161, -0.173},
        {0.071, 0.690, 0.075, 0.362, 0.062, -0.422, 0.538, 0.087, -0.130},
        {0.076, 0.744, 0.016, 0.388, -0.075, -0.574, 0.400, -0.040, -0.023},
        {0.057, 0.562, 0.101, 0.413, 0.015, -0.380, 0.652, 0.270, -0.170},
    };
    const auto& r = table[which - 1];
    return ParamVector(Family::SRN_GARCH, {r[2], null_beta1 ? 0.0 : r[3], r[0], r[1], r[4], r[5], r[6], r[7], r[8]});
}

Dgp resolve_dgp(const RunConfig& c) {
    const std::string label = upper(c.dgp);
    if (label == "SIM1") return {label, ParamVector(Family::GARCH, {0.05, 0.18, 0.8}), 2000, 0};
    if (label == "SIM2") return {label, std::nullopt, 2000, 0};
    if (label.rfind("SIM3-", 0) == 0) {
        const std::string rest = label.substr(5);
        const bool null_beta1 = rest.size() == 10 && rest.substr(1) == "-B1ZERO";
        if ((rest.size() == 1 || null_beta1) && rest[0] >= '1' && rest[0] <= '4') {
            return {label, sim3_theta(rest[0] - '0', null_beta1), 3000, 7000};
        }
    }
    if (label == "CUSTOM") {
        const Family family = parse_family(c.model);
        if (c.theta.size() != param_count(family)) {
            throw InvalidInput("custom DGP for " + to_string(family) + " needs " + std::to_string(param_count(family)) +
                               " values in --theta");
        }
        return {label, ParamVector(family, c.theta), 2000, 0};
    }
    throw InvalidInput("unknown DGP '" + c.dgp + "' (SIM1, SIM2, SIM3-1..4, SIM3-<i>-B1ZERO, CUSTOM)");
}

int cmd_simulate(const RunConfig& c) {
    const Dgp dgp = resolve_dgp(c);
    const std::size_t T = c.T.value_or(dgp.default_T);
    const std::size_t burnin = c.burnin.value_or(dgp.default_burnin);
    if (T == 0) throw InvalidInput("T must be at least 1");
    if (dgp.theta && !satisfies_constraints(dgp.theta->family, dgp.theta->values)) {
        throw InvalidInput("DGP parameters violate the " + to_string(dgp.theta->family) + " support constraints");
    }
    const auto dir = prepare_out(c);
    Rng rng = make_stream(c.smc.seed);
    const SimOutput sim = dgp.theta ? simulate(*dgp.theta, T, burnin, c.sigma_init_sq, rng, c.filter)
                                    : simulate_sim2(T, burnin, rng, c.sigma_init_sq);

    LabeledColumn ycol, scol;
    for (std::size_t t = 0; t < T; ++t) {
        ycol.labels.push_back(std::to_string(t + 1));
        ycol.values.push_back(sim.y[t]);
    }
    scol.labels = ycol.labels;
    scol.values = sim.sigma2;
    const std::string stem = "sim_" + lower(dgp.label);
    write_labeled_csv(dir / (stem + ".csv"), "y", ycol);
    write_labeled_csv(dir / (stem + "_truth.csv"), "sigma2", scol);

    json report;
    report["command"] = "simulate";
    report["dgp"] = dgp.label;
    report["T"] = T;
    report["burnin"] = burnin;
    report["seed"] = c.smc.seed;
    report["sigma_init_sq"] = c.sigma_init_sq;
    if (dgp.theta) {
        report["family"] = to_string(dgp.theta->family);
        json th = json::object();
        const auto& names = param_names(dgp.theta->family);
        for (std::size_t i = 0; i < names.size(); ++i) th[names[i]] = dgp.theta->values[i];
        report["theta"] = th;
        if (dgp.theta->family == Family::SRN_GARCH) {
            report["variance_bound"] = variance_bound(*dgp.theta, c.sigma_init_sq, c.filter.activation_bound);
        }
    }
    report["data_file"] = stem + ".csv";
    report["truth_file"] = stem + "_truth.csv";
    try {
        report["summary"] = to_json(sample_moments(sim.y));
    } catch (const DegenerateInput& e) {
        report["summary"] = nullptr;
    }
    write_json(dir / "simulate.json", report);
    return kOk;
}

WinCount count_losses(const RealizedLosses& a, const RealizedLosses& b) {
    const std::vector<double> va{a.mse1, a.mse2, a.mae1, a.mae2, a.qlike, a.r2log};
    const std::vector<double> vb{b.mse1, b.mse2, b.mae1, b.mae2, b.qlike, b.r2log};
    const std::vector<Better> rule(6, Better::Lower);
    return count_winner(va, vb, rule, 0.0);
}

int cmd_score(const RunConfig& c) {
    if (c.forecasts.empty()) throw InvalidInput("score needs at least one --forecasts file");
    const auto dir = prepare_out(c);

    std::vector<double> truth;
    if (!c.truth.empty()) {
        if (!fs::exists(c.truth)) throw InvalidInput("truth file not found: " + c.truth);
        truth = read_labeled_csv(c.truth).values;
    }

    struct Entry {
        std::string name;
        ScoreReport report;
        std::map<std::string, RealizedLosses> losses;
    };
    std::vector<Entry> entries;
    json models = json::array();
    for (const auto& path : c.forecasts) {
        if (!fs::exists(path)) throw InvalidInput("forecast file not found: " + path);
        const auto recs = read_records_csv(path);
        if (recs.empty()) throw InvalidInput("forecast file has no records: " + path);
        Entry e;
        e.name = fs::path(path).stem().string();
        e.report = score_forecasts(recs, c.alpha);
        json m;
        m["name"] = e.name;
        m["file"] = path;
        m["n"] = recs.size();
        m["scores"] = to_json(e.report);
        m["scores"]["realized_losses"] = realized_section(c.realized, recs, &e.losses);
        if (!truth.empty()) {
            const auto proxy = aligned_proxy(truth, recs, c.truth);
            std::vector<double> s2;
            for (const auto& r : recs) s2.push_back(r.sigma2_hat);
            e.losses["truth"] = realized_losses(s2, proxy);
            m["scores"]["realized_losses"]["truth"] = to_json(e.losses["truth"]);
        }
        models.push_back(m);
        entries.push_back(std::move(e));
    }

    json pairs = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t k = i + 1; k < entries.size(); ++k) {
            const auto& a = entries[i];
            const auto& b = entries[k];
            const WinCount w = count_winner(a.report, b.report);
            json p;
            p["a"] = a.name;
            p["b"] = b.name;
            p["predictive"] = {{"a", w.a}, {"b", w.b}};
            json per = json::object();
            for (const auto& [measure, la] : a.losses) {
                const auto it = b.losses.find(measure);
                if (it == b.losses.end()) continue;
                const WinCount lw = count_losses(la, it->second);
                per[measure] = {{"a", lw.a}, {"b", lw.b}};
            }
            p["realized"] = per;
            pairs.push_back(p);
        }
    }

    json report;
    report["command"] = "score";
    report["alpha"] = c.alpha;
    report["realized"] = c.realized;
    report["truth"] = c.truth.empty() ? json(nullptr) : json(c.truth);
    report["models"] = models;
    report["pairwise"] = pairs;
    write_json(dir / "score.json", report);
    return kOk;
}

int cmd_diagnose(const RunConfig& c) {
    const ReturnSeries y = load_returns(c);
    const auto dir = prepare_out(c);
    json report;
    report["command"] = "diagnose";
    report["data"] = c.data;
    report["n"] = y.size();
    json warnings = json::array();
    try {
        std::vector<double> abs_y(y.size()), sq_y(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            abs_y[i] = std::abs(y.values[i]);
            sq_y[i] = y.values[i] * y.values[i];
        }
        report["moments"] = to_json(sample_moments(y.values));
        report["ljung_box"] = to_json(ljung_box(y.values, c.lb_lags));
        report["ljung_box_squared"] = to_json(ljung_box(sq_y, c.lb_lags));
        report["ljung_box_lags"] = c.lb_lags;
        json rs_abs = json::array(), rs_sq = json::array();
        for (std::size_t q : c.rs_lags) {
            rs_abs.push_back(to_json(lo_rs(abs_y, q)));
            rs_sq.push_back(to_json(lo_rs(sq_y, q)));
        }
        report["lo_rs_absolute"] = rs_abs;
        report["lo_rs_squared"] = rs_sq;
        if (c.figarch) report["figarch"] = to_json(fit_figarch_qmle(y.values, c.figarch_lag));
        report["status"] = "ok";
    } catch (const DegenerateInput& e) {
        report["status"] = "degenerate";
        warn(warnings, e.what());
    }
    report["warnings"] = warnings;
    write_json(dir / "diagnose.json", report);
    return kOk;
}

double read_log_ml(const std::string& path, std::string* model) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open report " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidInput("report " + path + " is not valid JSON");
    }
    if (!j.contains("log_ml") || !j["log_ml"].is_number()) throw InvalidInput("report " + path + " has no log_ml field");
    *model = j.value("model", std::string());
    return j["log_ml"].get<double>();
}

int cmd_compare(const RunConfig& c) {
    if (c.reports.size() != 2) throw InvalidInput("compare needs exactly two fit reports");
    const auto dir = prepare_out(c);
    std::string model_a, model_b;
    const double a = read_log_ml(c.reports[0], &model_a);
    const double b = read_log_ml(c.reports[1], &model_b);
    const BayesFactor bf = bayes_factor(a, b);
    json report;
    report["command"] = "compare";
    report["a"] = {{"report", c.reports[0]}, {"model", model_a}, {"log_ml", a}};
    report["b"] = {{"report", c.reports[1]}, {"model", model_b}, {"log_ml", b}};
    report["log_bf"] = bf.log_bf;
    report["bf"] = std::isfinite(bf.bf) ? json(bf.bf) : json(nullptr);
    report["label"] = jeffreys_label(bf.log_bf);
    report["favors"] = bf.log_bf > 0.0 ? "a" : (bf.log_bf < 0.0 ? "b" : "neither");
    write_json(dir / "compare.json", report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent conditional heteroskedasticity models: Bayesian fitting, forecasting and diagnostics"};
    app.require_subcommand(1);
    Flags flags;

    std::map<std::string, CommandOptions> commands;
    auto make = [&](const std::string& name, const std::string& help) -> CommandOptions& {
        CommandOptions& c = commands[name];
        c.app = app.add_subcommand(name, help);
        add_common(c, flags);
        return c;
    };

    auto& fit = make("fit", "Likelihood-annealing SMC fit: posterior summaries and log marginal likelihood");
    add_smc(fit, flags);

    auto& forecast = make("forecast", "Data-annealing SMC one-step-ahead forecasts over the out-of-sample window");
    add_smc(forecast, flags);
    forecast.opts["realized"] = forecast.app->add_option("--realized", flags.realized, "Realized measure CSV, optionally KIND=path");
    forecast.opts["alpha"] = forecast.app->add_option("--alpha", flags.alpha, "VaR level");

    auto& sim = make("simulate", "Simulate SIM1, SIM2, SIM3-<i>[-B1ZERO] or a custom parameter vector");
    sim.opts["dgp"] = sim.app->add_option("--dgp", flags.dgp, "Data-generating process label");
    sim.opts["T"] = sim.app->add_option("-T,--length", flags.T, "Number of observations kept");
    sim.opts["burnin"] = sim.app->add_option("--burnin", flags.burnin, "Discarded initial steps");
    sim.opts["model"] = sim.app->add_option("--model", flags.model, "Family of a custom DGP");
    sim.opts["theta"] = sim.app->add_option("--theta", flags.theta, "Comma-separated parameters of a custom DGP");

    auto& score = make("score", "Score forecast record files against returns, realized measures and true variances");
    score.opts["forecasts"] = score.app->add_option("--forecasts", flags.forecasts, "Forecast records CSV (repeatable)");
    score.opts["realized"] = score.app->add_option("--realized", flags.realized, "Realized measure CSV, optionally KIND=path");
    score.opts["truth"] = score.app->add_option("--truth", flags.truth, "True variance CSV from simulate");
    score.opts["alpha"] = score.app->add_option("--alpha", flags.alpha, "VaR level");

    auto& diag = make("diagnose", "Moments, Ljung-Box, Lo's modified R/S and an optional FIGARCH fit");
    diag.opts["data"] = diag.app->add_option("--data", flags.data, "CSV of returns or residuals");
    diag.opts["data-kind"] = diag.app->add_option("--data-kind", flags.data_kind, "auto, returns or prices");
    diag.opts["figarch"] = diag.app->add_flag("--figarch", flags.figarch, "Also fit FIGARCH(1,d,1) by QMLE");

    auto& cmp = make("compare", "Bayes factor between two fit reports");
    cmp.opts["reports"] = cmp.app->add_option("reports", flags.reports, "Two fit report JSON files")->expected(2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        for (auto& [name, cmd] : commands) {
            if (!cmd.app->parsed()) continue;
            const RunConfig cfg = resolve(cmd, flags);
            if (cfg.threads > 0) set_thread_count(cfg.threads);
            if (name == "fit") return cmd_fit(cfg);
            if (name == "forecast") return cmd_forecast(cfg);
            if (name == "simulate") return cmd_simulate(cfg);
            if (name == "score") return cmd_score(cfg);
            if (name == "diagnose") return cmd_diagnose(cfg);
            if (name == "compare") return cmd_compare(cfg);
        }
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}
