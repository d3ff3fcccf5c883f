#include "vibtrack/series.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "vibtrack/error.hpp"

namespace vibtrack {

std::vector<double> MeasurementSeries::du() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.du);
    return out;
}

std::vector<double> MeasurementSeries::dv() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.dv);
    return out;
}

std::vector<double> MeasurementSeries::times() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.t);
    return out;
}

MeasurementSeries make_series(double fps, const std::vector<double>& du, const std::vector<double>& dv) {
    if (du.size() != dv.size()) throw InvalidArgument("du and dv lengths differ");
    if (!(fps > 0.0)) throw InvalidArgument("frame rate must be positive");
    MeasurementSeries series;
    series.fps = fps;
    series.samples.resize(du.size());
    for (std::size_t j = 0; j < du.size(); ++j) {
        series.samples[j] = {static_cast<double>(j) / fps, du[j], dv[j], 1, false};
    }
    return series;
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string s(buf);
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

void write_measurement_csv(std::ostream& out, const MeasurementSeries& series) {
    out << "t,du,dv,quality,fallback\n";
    for (const auto& s : series.samples) {
        out << format_fixed(s.t) << ',' << format_fixed(s.du) << ',' << format_fixed(s.dv) << ',' << s.quality
            << ',' << (s.fallback ? 1 : 0) << '\n';
    }
}

MeasurementSeries read_measurement_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    const std::size_t t_col = table.column("t");
    const std::size_t du_col = table.column("du");
    const std::size_t dv_col = table.column("dv");
    const auto quality_col = table.find_column("quality");
    const auto fallback_col = table.find_column("fallback");
    MeasurementSeries series;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        MeasurementSample s;
        s.t = table.number(r, t_col);
        s.du = table.number(r, du_col);
        s.dv = table.number(r, dv_col);
        s.quality = quality_col ? static_cast<int>(table.number(r, *quality_col)) : 1;
        s.fallback = fallback_col ? table.number(r, *fallback_col) != 0.0 : false;
        if (!series.samples.empty() && s.t <= series.samples.back().t) {
            throw ParseError("measurement CSV row " + std::to_string(r + 2) + ": t is not strictly increasing");
        }
        series.samples.push_back(s);
    }
    if (series.samples.size() >= 2) {
        const double dt = (series.samples.back().t - series.samples.front().t) /
                          static_cast<double>(series.samples.size() - 1);
        series.fps = 1.0 / dt;
    }
    return series;
}

}  // namespace vibtrack
