#include "vibtrack/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "csv.hpp"
#include "vibtrack/error.hpp"

namespace vibtrack::measure {

std::string unit_name(Unit unit) { return unit == Unit::inch ? "in" : "mm"; }

Unit parse_unit(const std::string& name) {
    if (name == "in" || name == "inch" || name == "inches") return Unit::inch;
    if (name == "mm" || name == "millimeter" || name == "millimeters") return Unit::millimeter;
    throw InvalidArgument("unknown length unit '" + name + "' (expected inch or mm)");
}

Calibration calibrate_from_reference(double length_px, double length_units, Unit unit) {
    if (!(length_px > 0.0) || !(length_units > 0.0)) {
        throw InvalidArgument("calibration lengths must be positive");
    }
    return {length_units / length_px, unit};
}

PhysicalSeries to_physical(const MeasurementSeries& series, const Calibration& cal) {
    if (!(cal.scale > 0.0)) throw InvalidArgument("calibration scale must be positive");
    PhysicalSeries out;
    out.unit = cal.unit;
    out.samples.reserve(series.size());
    for (const auto& s : series.samples) out.samples.push_back({s.t, cal.scale * s.du, cal.scale * s.dv});
    return out;
}

void write_physical_csv(std::ostream& out, const PhysicalSeries& series) {
    out << "t,dx,dy\n";
    for (const auto& s : series.samples) {
        out << format_fixed(s.t) << ',' << format_fixed(s.dx, 9) << ',' << format_fixed(s.dy, 9) << '\n';
    }
}

ReferenceSeries load_truth_csv(std::istream& in, const std::string& column) {
    const csv::Table table = csv::read(in);
    if (table.header.empty() || table.header[0] != "t") throw ParseError("truth CSV must start with a 't' column");
    if (table.header.size() < 2) throw ParseError("truth CSV needs at least one value column");
    const std::size_t col = column.empty() ? 1 : table.column(column);
    ReferenceSeries out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double t = table.number(r, 0);
        if (!out.t.empty() && t <= out.t.back()) {
            throw ParseError("truth CSV row " + std::to_string(r + 2) + ": t is not strictly increasing");
        }
        out.t.push_back(t);
        out.value.push_back(table.number(r, col));
    }
    return out;
}

double mae(const ReferenceSeries& measured, const ReferenceSeries& truth) {
    if (measured.t.size() != measured.value.size() || truth.t.size() != truth.value.size()) {
        throw InvalidArgument("series time and value lengths differ");
    }
    if (truth.t.empty() || measured.t.empty()) throw InvalidArgument("MAE of an empty series");
    const double lo = truth.t.front();
    const double hi = truth.t.back();
    double total = 0.0;
    std::size_t count = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < measured.t.size(); ++i) {
        const double t = measured.t[i];
        if (t < lo || t > hi) continue;
        while (k + 1 < truth.t.size() && truth.t[k + 1] < t) ++k;
        double ref;
        if (truth.t.size() == 1 || t == truth.t[k]) {
            ref = truth.value[k];
        } else {
            const double span = truth.t[k + 1] - truth.t[k];
            const double w = (t - truth.t[k]) / span;
            ref = (1.0 - w) * truth.value[k] + w * truth.value[k + 1];
        }
        total += std::abs(measured.value[i] - ref);
        ++count;
    }
    if (count == 0) throw InvalidArgument("measured and truth series do not overlap in time");
    return total / static_cast<double>(count);
}

double frequency_error(double measured_hz, double reference_hz) {
    if (!(reference_hz > 0.0)) throw InvalidArgument("reference frequency must be positive");
    return 100.0 * std::abs(measured_hz - reference_hz) / reference_hz;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "kind,name,value,reference,error_percent,samples\n";
    for (const auto& m : report.methods) {
        out << "mae," << m.method << ',' << format_fixed(m.mae, 9) << ",,," << m.samples << '\n';
    }
    for (const auto& f : report.frequencies) {
        out << "frequency," << f.target << ',' << format_fixed(f.measured_hz) << ',' << format_fixed(f.reference_hz)
            << ',' << format_fixed(f.error_percent, 3) << ",\n";
    }
}

void write_report_text(std::ostream& out, const EvalReport& report) {
    char line[256];
    if (!report.methods.empty()) {
        std::snprintf(line, sizeof line, "MAE (%s)\n", report.unit.c_str());
        out << line;
        std::snprintf(line, sizeof line, "| %-28s | %14s | %8s |\n", "Method", "MAE", "Samples");
        out << line << "|" << std::string(30, '-') << "|" << std::string(16, '-') << "|" << std::string(10, '-')
            << "|\n";
        for (const auto& m : report.methods) {
            std::snprintf(line, sizeof line, "| %-28s | %14.6f | %8zu |\n", m.method.c_str(), m.mae, m.samples);
            out << line;
        }
    }
    if (!report.frequencies.empty()) {
        if (!report.methods.empty()) out << '\n';
        out << "Frequencies\n";
        std::snprintf(line, sizeof line, "| %-20s | %12s | %12s | %9s |\n", "Target", "Reference Hz", "Measured Hz",
                      "Error %");
        out << line << "|" << std::string(22, '-') << "|" << std::string(14, '-') << "|" << std::string(14, '-') << "|"
            << std::string(11, '-') << "|\n";
        for (const auto& f : report.frequencies) {
            std::snprintf(line, sizeof line, "| %-20s | %12.4f | %12.4f | %9.3f |\n", f.target.c_str(),
                          f.reference_hz, f.measured_hz, f.error_percent);
            out << line;
        }
    }
}

}  // namespace vibtrack::measure
