#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vibtrack/series.hpp"

namespace vibtrack::measure {

enum class Unit { inch, millimeter };

std::string unit_name(Unit unit);
Unit parse_unit(const std::string& name);

/// Length units per pixel.
struct Calibration {
    double scale = 1.0;
    Unit unit = Unit::millimeter;
};

Calibration calibrate_from_reference(double length_px, double length_units, Unit unit);

struct PhysicalSample {
    double t = 0.0;
    double dx = 0.0;
    double dy = 0.0;
};

struct PhysicalSeries {
    Unit unit = Unit::millimeter;
    std::vector<PhysicalSample> samples;
};

PhysicalSeries to_physical(const MeasurementSeries& series, const Calibration& cal);

/// CSV "t,dx,dy" in the calibration unit.
void write_physical_csv(std::ostream& out, const PhysicalSeries& series);

/// A time-stamped scalar channel (reference sensor or one axis of a measurement).
struct ReferenceSeries {
    std::vector<double> t;
    std::vector<double> value;
};

/// Reads a CSV whose first column is "t". `column` selects a value column by
/// name; empty selects the first column after t.
ReferenceSeries load_truth_csv(std::istream& in, const std::string& column = "");

/// Mean absolute error with the truth linearly interpolated onto the measured
/// timestamps that fall inside the truth's time range.
double mae(const ReferenceSeries& measured, const ReferenceSeries& truth);

/// 100 * |measured - reference| / reference.
double frequency_error(double measured_hz, double reference_hz);

struct MethodResult {
    std::string method;
    double mae = 0.0;
    std::size_t samples = 0;
};

struct FrequencyResult {
    std::string target;
    double reference_hz = 0.0;
    double measured_hz = 0.0;
    double error_percent = 0.0;
};

struct EvalReport {
    std::string unit;
    std::vector<MethodResult> methods;
    std::vector<FrequencyResult> frequencies;
};

void write_report_csv(std::ostream& out, const EvalReport& report);
/// Plain-text table: one row per method, plus a frequency table when present.
void write_report_text(std::ostream& out, const EvalReport& report);

}  // namespace vibtrack::measure
