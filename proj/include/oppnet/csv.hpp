#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "oppnet/analytics.hpp"
#include "oppnet/experiment.hpp"

namespace oppnet {

// RFC 4180 style: fields containing a comma, quote or line break are quoted,
// quotes doubled. Lines starting with '#' before the header are comments.
std::string csv_escape(std::string_view field);
std::string format_number(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void comment(std::string_view text);
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column; throws std::out_of_range when absent.
    [[nodiscard]] std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

inline constexpr std::string_view kTradeoffKind = "tradeoff";
inline constexpr std::string_view kCurvesKind = "curves";

void write_tradeoff_csv(std::ostream& out, const std::vector<OperatingPoint>& points);
std::vector<OperatingPoint> read_tradeoff_csv(std::istream& in);

// law,x,y,in_regime
void write_curves_csv(std::ostream& out, const std::vector<ScalingCurve>& curves);

} // namespace oppnet
