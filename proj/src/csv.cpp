#include "oppnet/csv.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace oppnet {

std::string csv_escape(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.10g}", v);
}

void CsvWriter::comment(std::string_view text)
{
    fmt::print(out_, "# {}\n", text);
}

void CsvWriter::row(const std::vector<std::string>& fields)
{
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_escape(fields[i]);
    }
    line += '\n';
    out_ << line;
}

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::out_of_range(fmt::format("csv: no column '{}'", name));
}

namespace {

// Reads one record, which may span lines inside quotes. False at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::string& raw)
{
    fields.clear();
    raw.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        raw += c;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    raw += c;
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quoted field");
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

} // namespace

CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::vector<std::string> fields;
    std::string raw;
    bool have_header = false;
    while (read_record(in, fields, raw)) {
        if (!have_header) {
            if (!raw.empty() && raw[0] == '#') {
                std::string c = raw.substr(1);
                while (!c.empty() && (c.back() == '\n' || c.back() == '\r')) c.pop_back();
                if (!c.empty() && c.front() == ' ') c.erase(0, 1);
                t.comments.push_back(c);
                continue;
            }
            if (raw == "\n" || raw.empty()) continue;
            t.header = fields;
            have_header = true;
            continue;
        }
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != t.header.size()) {
            throw std::runtime_error(
                fmt::format("csv: row has {} fields, header has {}", fields.size(), t.header.size()));
        }
        t.rows.push_back(fields);
    }
    if (!have_header) throw std::runtime_error("csv: missing header row");
    return t;
}

namespace {

const std::vector<std::string> kTradeoffColumns = {
    "engine",     "n",          "alpha",   "D_target", "D_measured", "M_star",        "per_hop_power",
    "P_total",    "mean_PI",    "mean_Pr", "outage",   "throughput", "ci_low",        "ci_high",
    "cells_per_side", "accepted", "errors"};

double to_double(const std::string& s)
{
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error(fmt::format("csv: bad number '{}'", s));
    return v;
}

} // namespace

void write_tradeoff_csv(std::ostream& out, const std::vector<OperatingPoint>& points)
{
    CsvWriter w(out);
    w.comment(fmt::format("oppnet {} v1", kTradeoffKind));
    w.row(kTradeoffColumns);
    for (const auto& p : points) {
        w.row({to_string(p.engine), std::to_string(p.n), format_number(p.alpha), format_number(p.d_target),
               format_number(p.d_measured), std::to_string(p.m_star), format_number(p.per_hop_power),
               format_number(p.p_total), format_number(p.mean_pi), format_number(p.mean_pr), format_number(p.outage),
               format_number(p.throughput), format_number(p.ci_low), format_number(p.ci_high),
               std::to_string(p.cells_per_side), p.accepted ? "1" : "0", p.errors});
    }
}

std::vector<OperatingPoint> read_tradeoff_csv(std::istream& in)
{
    const CsvTable t = read_csv(in);
    std::vector<std::size_t> col;
    for (const auto& name : kTradeoffColumns) col.push_back(t.column(name));
    std::vector<OperatingPoint> out;
    for (const auto& r : t.rows) {
        OperatingPoint p;
        p.engine = parse_engine(r[col[0]]);
        p.n = static_cast<std::size_t>(std::stoull(r[col[1]]));
        p.alpha = to_double(r[col[2]]);
        p.d_target = to_double(r[col[3]]);
        p.d_measured = to_double(r[col[4]]);
        p.m_star = static_cast<std::size_t>(std::stoull(r[col[5]]));
        p.per_hop_power = to_double(r[col[6]]);
        p.p_total = to_double(r[col[7]]);
        p.mean_pi = to_double(r[col[8]]);
        p.mean_pr = to_double(r[col[9]]);
        p.outage = to_double(r[col[10]]);
        p.throughput = to_double(r[col[11]]);
        p.ci_low = to_double(r[col[12]]);
        p.ci_high = to_double(r[col[13]]);
        p.cells_per_side = std::stoi(r[col[14]]);
        p.accepted = r[col[15]] == "1";
        p.errors = r[col[16]];
        out.push_back(std::move(p));
    }
    return out;
}

void write_curves_csv(std::ostream& out, const std::vector<ScalingCurve>& curves)
{
    CsvWriter w(out);
    w.comment(fmt::format("oppnet {} v1", kCurvesKind));
    w.row({"law", "x", "y", "in_regime"});
    for (const auto& c : curves) {
        for (const auto& s : c.samples) {
            w.row({to_string(c.law), format_number(s.x), format_number(s.y), s.in_regime ? "1" : "0"});
        }
    }
}

} // namespace oppnet
