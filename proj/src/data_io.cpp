#include "rech/data_io.hpp"

#include "rech/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rech {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool is_integer_label(const std::string& s) {
    if (s.empty()) return false;
    long long v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && ptr == end;
}

// Integer labels compare numerically, everything else lexicographically (ISO dates sort correctly).
bool label_less(const std::string& a, const std::string& b) {
    if (is_integer_label(a) && is_integer_label(b)) return std::stoll(a) < std::stoll(b);
    return a < b;
}

}  // namespace

std::string to_string(RealizedKind kind) {
    switch (kind) {
        case RealizedKind::RV: return "RV";
        case RealizedKind::BV: return "BV";
        case RealizedKind::MedRV: return "MedRV";
        case RealizedKind::RKV1: return "RKV1";
        case RealizedKind::RKV2: return "RKV2";
        case RealizedKind::RKV3: return "RKV3";
    }
    return "RV";
}

RealizedKind parse_realized_kind(const std::string& label) {
    for (auto kind : {RealizedKind::RV, RealizedKind::BV, RealizedKind::MedRV, RealizedKind::RKV1,
                      RealizedKind::RKV2, RealizedKind::RKV3}) {
        if (to_string(kind) == label) return kind;
    }
    throw InvalidInput("unknown realized measure kind '" + label + "'");
}

ReturnSeries demean_log_returns(const PriceSeries& prices) {
    const auto& p = prices.prices;
    if (p.size() < 2) throw InvalidInput("price series needs at least 2 observations");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0) || !std::isfinite(p[i])) {
            throw InvalidInput("nonpositive price at index " + std::to_string(i));
        }
    }
    std::vector<double> r(p.size() - 1);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) r[i] = std::log(p[i + 1] / p[i]);
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    for (auto& v : r) v = 100.0 * (v - mean);

    ReturnSeries out;
    out.values = std::move(r);
    out.t_in = 0;
    out.t_out = out.values.size();
    return out;
}

ReturnSeries split(ReturnSeries series, std::size_t t_in) {
    if (t_in == 0 || t_in >= series.values.size()) {
        throw InvalidInput("split point " + std::to_string(t_in) + " outside (0, " +
                           std::to_string(series.values.size()) + ")");
    }
    series.t_in = t_in;
    series.t_out = series.values.size() - t_in;
    return series;
}

RealizedSeries scale_realized_measure(const RealizedSeries& rv, std::span<const double> test_returns) {
    if (rv.values.size() != test_returns.size()) {
        throw InvalidInput("realized measure has " + std::to_string(rv.values.size()) +
                           " values but the test window has " + std::to_string(test_returns.size()));
    }
    double sum_rv = 0.0;
    double sum_y2 = 0.0;
    for (std::size_t t = 0; t < test_returns.size(); ++t) {
        if (rv.values[t] < 0.0) throw InvalidInput("negative realized measure at index " + std::to_string(t));
        sum_rv += rv.values[t];
        sum_y2 += test_returns[t] * test_returns[t];
    }
    if (!(sum_rv > 0.0)) throw DegenerateInput("realized measure sums to zero");
    const double c = sum_y2 / sum_rv;

    RealizedSeries out{rv.values, rv.kind};
    for (auto& v : out.values) v *= c;
    return out;
}

double parse_number(const std::string& cell) {
    const std::string s = trim(cell);
    if (s.empty()) throw InvalidInput("empty numeric cell");
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v, std::chars_format::general);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw InvalidInput("not a finite number: '" + s + "'");
    }
    return v;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

LabeledColumn read_labeled_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("'" + path.string() + "' is empty");

    LabeledColumn col;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
        }
        const std::string label = trim(line.substr(0, comma));
        const std::string cell = line.substr(comma + 1);
        if (cell.find(',') != std::string::npos) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
        }
        try {
            col.values.push_back(parse_number(cell));
        } catch (const InvalidInput& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        col.labels.push_back(label);
    }
    return col;
}

void write_labeled_csv(const std::filesystem::path& path, const std::string& value_header,
                       const LabeledColumn& column) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
    out << "date," << value_header << '\n';
    for (std::size_t i = 0; i < column.values.size(); ++i) {
        out << column.labels[i] << ',' << format_number(column.values[i]) << '\n';
    }
}

PriceSeries read_prices_csv(const std::filesystem::path& path) {
    auto col = read_labeled_csv(path);
    for (std::size_t i = 1; i < col.labels.size(); ++i) {
        if (!label_less(col.labels[i - 1], col.labels[i])) {
            throw InvalidInput(path.string() + ": dates not strictly increasing at row " + std::to_string(i + 1));
        }
    }
    return PriceSeries{std::move(col.labels), std::move(col.values)};
}

ReturnSeries read_returns_csv(const std::filesystem::path& path) {
    auto col = read_labeled_csv(path);
    ReturnSeries out;
    out.values = std::move(col.values);
    out.t_out = out.values.size();
    return out;
}

RealizedSeries read_realized_csv(const std::filesystem::path& path, RealizedKind kind) {
    auto col = read_labeled_csv(path);
    for (std::size_t i = 0; i < col.values.size(); ++i) {
        if (col.values[i] < 0.0) {
            throw InvalidInput(path.string() + ": negative realized measure at row " + std::to_string(i + 2));
        }
    }
    return RealizedSeries{std::move(col.values), kind};
}

}  // namespace rech
