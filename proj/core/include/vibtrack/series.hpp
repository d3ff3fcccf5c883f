#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace vibtrack {

/// One frame's target displacement relative to frame 0, in pixels.
struct MeasurementSample {
    double t = 0.0;
    double du = 0.0;
    double dv = 0.0;
    /// Keypoint matches (keypoint mode) or surviving points (LK) behind this
    /// entry; 1 for plain box translation.
    int quality = 0;
    /// True when keypoint refinement failed and box translation was used.
    bool fallback = false;
};

/// Uniformly sampled pixel-displacement series; entry j sits at t = j / fps.
struct MeasurementSeries {
    double fps = 0.0;
    std::vector<MeasurementSample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    std::vector<double> du() const;
    std::vector<double> dv() const;
    std::vector<double> times() const;
};

/// Builds a series from per-frame displacements, stamping t = j / fps.
MeasurementSeries make_series(double fps, const std::vector<double>& du, const std::vector<double>& dv);

/// CSV with header "t,du,dv,quality,fallback". Values use fixed 6-decimal text.
void write_measurement_csv(std::ostream& out, const MeasurementSeries& series);
MeasurementSeries read_measurement_csv(std::istream& in);

/// Formats with a fixed number of decimals, normalizing "-0.000000" to "0.000000".
std::string format_fixed(double value, int decimals = 6);

}  // namespace vibtrack
