#include "rech/model_space.hpp"

#include "rech/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

namespace rech {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string normalize_label(std::string_view label) {
    std::string s;
    for (char c : label) s.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return s;
}

// Pulls the named coordinates out of a raw vector; unused fields stay zero.
struct Coords {
    double omega = 0, alpha = 0, beta = 0, gamma = 0, beta0 = 0, beta1 = 0;
};

Coords coords(Family family, std::span<const double> t) {
    Coords c;
    switch (family) {
        case Family::GARCH: c.omega = t[0]; c.alpha = t[1]; c.beta = t[2]; break;
        case Family::GJR:
        case Family::EGARCH: c.omega = t[0]; c.alpha = t[1]; c.beta = t[2]; c.gamma = t[3]; break;
        case Family::SRN_GARCH: c.beta0 = t[0]; c.beta1 = t[1]; c.alpha = t[2]; c.beta = t[3]; break;
        case Family::SRN_GJR:
            c.beta0 = t[0]; c.beta1 = t[1]; c.alpha = t[2]; c.beta = t[3]; c.gamma = t[4];
            break;
        case Family::SRN_EGARCH:
            c.beta0 = t[0]; c.beta1 = t[1]; c.omega = t[2]; c.alpha = t[3]; c.beta = t[4]; c.gamma = t[5];
            break;
    }
    return c;
}

}  // namespace

std::string to_string(Family family) {
    switch (family) {
        case Family::GARCH: return "GARCH";
        case Family::GJR: return "GJR";
        case Family::EGARCH: return "EGARCH";
        case Family::SRN_GARCH: return "SRN_GARCH";
        case Family::SRN_GJR: return "SRN_GJR";
        case Family::SRN_EGARCH: return "SRN_EGARCH";
    }
    return "GARCH";
}

Family parse_family(std::string_view label) {
    const auto norm = normalize_label(label);
    for (auto f : kAllFamilies) {
        if (to_string(f) == norm) return f;
    }
    throw InvalidInput("unknown model '" + std::string(label) + "'");
}

bool is_recurrent(Family family) noexcept {
    return family == Family::SRN_GARCH || family == Family::SRN_GJR || family == Family::SRN_EGARCH;
}

Family baseline_of(Family family) noexcept {
    switch (family) {
        case Family::SRN_GARCH: return Family::GARCH;
        case Family::SRN_GJR: return Family::GJR;
        case Family::SRN_EGARCH: return Family::EGARCH;
        default: return family;
    }
}

const std::vector<std::string>& param_names(Family family) {
    static const std::vector<std::string> garch{"omega", "alpha", "beta"};
    static const std::vector<std::string> gjr{"omega", "alpha", "beta", "gamma"};
    static const std::vector<std::string> srn_garch{"beta0", "beta1", "alpha", "beta", "v0", "v1", "v2", "w", "b"};
    static const std::vector<std::string> srn_gjr{"beta0", "beta1", "alpha", "beta", "gamma",
                                                  "v0",    "v1",    "v2",    "w",    "b"};
    static const std::vector<std::string> srn_egarch{"beta0", "beta1", "omega", "alpha", "beta", "gamma",
                                                     "v0",    "v1",    "v2",    "w",     "b"};
    switch (family) {
        case Family::GARCH: return garch;
        case Family::GJR:
        case Family::EGARCH: return gjr;
        case Family::SRN_GARCH: return srn_garch;
        case Family::SRN_GJR: return srn_gjr;
        case Family::SRN_EGARCH: return srn_egarch;
    }
    return garch;
}

std::size_t param_count(Family family) { return param_names(family).size(); }

std::size_t param_index(Family family, std::string_view name) noexcept {
    const auto& names = param_names(family);
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? std::string::npos : static_cast<std::size_t>(it - names.begin());
}

ParamVector::ParamVector(Family f, std::vector<double> v) : family(f), values(std::move(v)) {
    if (values.size() != param_count(family)) {
        throw InvalidInput(to_string(family) + " expects " + std::to_string(param_count(family)) +
                           " parameters, got " + std::to_string(values.size()));
    }
}

double ParamVector::get(std::string_view name) const {
    const auto i = param_index(family, name);
    if (i == std::string::npos) throw InvalidInput(to_string(family) + " has no parameter '" + std::string(name) + "'");
    return values[i];
}

void ParamVector::set(std::string_view name, double value) {
    const auto i = param_index(family, name);
    if (i == std::string::npos) throw InvalidInput(to_string(family) + " has no parameter '" + std::string(name) + "'");
    values[i] = value;
}

bool ParamVector::has(std::string_view name) const { return param_index(family, name) != std::string::npos; }

bool satisfies_constraints(Family family, std::span<const double> theta) noexcept {
    if (theta.size() != param_count(family)) return false;
    for (double v : theta) {
        if (!std::isfinite(v)) return false;
    }
    const Coords c = coords(family, theta);
    if (is_recurrent(family) && (c.beta0 < 0.0 || c.beta1 < 0.0)) return false;
    switch (baseline_of(family)) {
        case Family::GARCH:
            if (family == Family::GARCH && !(c.omega > 0.0)) return false;
            return c.alpha >= 0.0 && c.beta >= 0.0 && c.alpha + c.beta < 1.0;
        case Family::GJR:
            if (family == Family::GJR && !(c.omega > 0.0)) return false;
            return c.alpha >= 0.0 && c.beta >= 0.0 && c.alpha + c.gamma >= 0.0 && c.alpha + c.beta + c.gamma < 1.0;
        case Family::EGARCH:
            return c.beta >= 0.0 && c.beta < 1.0;
        default:
            return false;
    }
}

double Prior::log_density(double x) const noexcept {
    if (kind == Kind::Uniform) {
        if (x < a || x > b) return kNegInf;
        return -std::log(b - a);
    }
    const double d = x - a;
    return -0.5 * std::log(2.0 * std::numbers::pi * b) - d * d / (2.0 * b);
}

double Prior::draw(Rng& rng) const {
    if (kind == Kind::Uniform) return std::uniform_real_distribution<double>(a, b)(rng);
    return std::normal_distribution<double>(a, std::sqrt(b))(rng);
}

const Prior& PriorSpec::at(std::string_view name) const {
    const auto i = param_index(family, name);
    if (i == std::string::npos) throw InvalidInput(to_string(family) + " has no parameter '" + std::string(name) + "'");
    return priors[i];
}

Prior& PriorSpec::at(std::string_view name) {
    return const_cast<Prior&>(static_cast<const PriorSpec&>(*this).at(name));
}

PriorSpec default_priors(Family family) {
    PriorSpec spec{family, std::vector<Prior>(param_count(family))};
    const auto& names = param_names(family);
    const Family base = baseline_of(family);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& n = names[i];
        Prior p;
        if (n == "beta0" || n == "beta1") {
            p = Prior::uniform(0.0, 0.5);
        } else if (n == "v0" || n == "v1" || n == "v2" || n == "w" || n == "b") {
            p = Prior::normal(0.0, 0.1);
        } else if (n == "gamma") {
            p = Prior::normal(0.0, 0.1);
        } else if (base == Family::EGARCH) {
            p = (n == "beta") ? Prior::uniform(0.0, 1.0) : Prior::normal(0.0, 1.0);
        } else {
            p = (n == "omega") ? Prior::uniform(0.0, 10.0) : Prior::uniform(0.0, 1.0);
        }
        spec.priors[i] = p;
    }
    return spec;
}

double log_prior(const PriorSpec& priors, std::span<const double> theta) noexcept {
    if (!satisfies_constraints(priors.family, theta)) return kNegInf;
    double lp = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        lp += priors.priors[i].log_density(theta[i]);
        if (lp == kNegInf) return kNegInf;
    }
    return lp;
}

double log_prior(const PriorSpec& priors, const ParamVector& theta) noexcept {
    if (theta.family != priors.family) return kNegInf;
    return log_prior(priors, std::span<const double>(theta.values));
}

void sample_prior_into(const PriorSpec& priors, std::span<double> out, Rng& rng, std::size_t* attempts) {
    std::size_t tries = 0;
    do {
        ++tries;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = priors.priors[i].draw(rng);
    } while (log_prior(priors, std::span<const double>(out.data(), out.size())) == kNegInf);
    if (attempts) *attempts += tries;
}

std::vector<ParamVector> sample_prior(const PriorSpec& priors, std::size_t count, Rng& rng, std::size_t* attempts) {
    if (count == 0) throw InvalidInput("prior sample size must be at least 1");
    if (attempts) *attempts = 0;
    std::vector<ParamVector> draws;
    draws.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        std::vector<double> v(param_count(priors.family));
        sample_prior_into(priors, v, rng, attempts);
        draws.emplace_back(priors.family, std::move(v));
    }
    return draws;
}

nlohmann::json to_json(const PriorSpec& priors) {
    nlohmann::json j = nlohmann::json::object();
    const auto& names = param_names(priors.family);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& p = priors.priors[i];
        if (p.kind == Prior::Kind::Uniform) {
            j[names[i]] = {{"dist", "uniform"}, {"lo", p.a}, {"hi", p.b}};
        } else {
            j[names[i]] = {{"dist", "normal"}, {"mean", p.a}, {"var", p.b}};
        }
    }
    return j;
}

PriorSpec priors_from_json(Family family, const nlohmann::json& j) {
    PriorSpec spec = default_priors(family);
    if (j.is_null()) return spec;
    if (!j.is_object()) throw InvalidInput("priors must be a JSON object");
    for (const auto& [name, entry] : j.items()) {
        if (param_index(family, name) == std::string::npos) {
            throw InvalidInput(to_string(family) + " has no parameter '" + name + "'");
        }
        const auto dist = entry.value("dist", std::string{});
        Prior p;
        if (dist == "uniform") {
            p = Prior::uniform(entry.at("lo").get<double>(), entry.at("hi").get<double>());
            if (!std::isfinite(p.a) || !std::isfinite(p.b) || !(p.a < p.b)) {
                throw InvalidInput("uniform prior for '" + name + "' needs finite lo < hi");
            }
        } else if (dist == "normal") {
            p = Prior::normal(entry.at("mean").get<double>(), entry.at("var").get<double>());
            if (!(p.b > 0.0)) throw InvalidInput("normal prior for '" + name + "' needs var > 0");
        } else {
            throw InvalidInput("prior for '" + name + "' must have dist uniform or normal");
        }
        spec.at(name) = p;
    }
    return spec;
}

}  // namespace rech
