#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rech {

/// Closing prices with calendar labels. Labels may be ISO dates or integers.
struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<double> prices;
};

/// Demeaned percent log-returns with an in-/out-of-sample split.
struct ReturnSeries {
    std::vector<double> values;
    std::size_t t_in = 0;
    std::size_t t_out = 0;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] std::span<const double> train() const noexcept {
        return std::span<const double>(values).first(t_in);
    }
    [[nodiscard]] std::span<const double> test() const noexcept {
        return std::span<const double>(values).subspan(t_in);
    }
};

enum class RealizedKind { RV, BV, MedRV, RKV1, RKV2, RKV3 };

[[nodiscard]] std::string to_string(RealizedKind kind);
[[nodiscard]] RealizedKind parse_realized_kind(const std::string& label);

/// One realized measure value per out-of-sample day.
struct RealizedSeries {
    std::vector<double> values;
    RealizedKind kind = RealizedKind::RV;
};

/// y_t = 100 * (log(P_{t+1}/P_t) - mean log-return). The full-sample mean is used.
[[nodiscard]] ReturnSeries demean_log_returns(const PriceSeries& prices);

/// Marks the first `t_in` observations as in-sample. Requires 0 < t_in < length.
[[nodiscard]] ReturnSeries split(ReturnSeries series, std::size_t t_in);

/// Rescales a realized measure so that its sum matches the sum of squared test returns.
[[nodiscard]] RealizedSeries scale_realized_measure(const RealizedSeries& rv,
                                                    std::span<const double> test_returns);

// CSV interchange. Every file has a header row and two columns: a label and a value.

struct LabeledColumn {
    std::vector<std::string> labels;
    std::vector<double> values;
};

/// Reads `label,value` rows. Missing or non-numeric cells raise InvalidInput.
[[nodiscard]] LabeledColumn read_labeled_csv(const std::filesystem::path& path);
void write_labeled_csv(const std::filesystem::path& path, const std::string& value_header,
                       const LabeledColumn& column);

[[nodiscard]] PriceSeries read_prices_csv(const std::filesystem::path& path);
/// Returns are taken as given (never re-demeaned).
[[nodiscard]] ReturnSeries read_returns_csv(const std::filesystem::path& path);
[[nodiscard]] RealizedSeries read_realized_csv(const std::filesystem::path& path,
                                               RealizedKind kind = RealizedKind::RV);

/// Parses a decimal number (optionally in scientific notation). Rejects NaN, inf and trailing junk.
[[nodiscard]] double parse_number(const std::string& cell);

/// Formats a double so that parse_number round-trips it exactly.
[[nodiscard]] std::string format_number(double value);

}  // namespace rech
