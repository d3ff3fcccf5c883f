#pragma once

#include <cstddef>
#include <vector>

#include "vibtrack/image.hpp"
#include "vibtrack/series.hpp"

namespace vibtrack::flow {

struct LKConfig {
    int window_radius = 10;
    int pyramid_levels = 3;
    int max_iterations = 30;
    double epsilon = 0.01;
    double min_eigenvalue = 1e-4;

    void validate() const;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

enum class PointStatus { valid, lost_bounds, lost_conditioning, lost_convergence };

struct TrackedPoint {
    Point position;
    PointStatus status = PointStatus::valid;
};

/// Blurred image pyramid with central-difference gradients, reusable across
/// the frame pairs a frame takes part in.
struct LKPyramid {
    std::vector<Frame> images;
    std::vector<Frame> grad_x;
    std::vector<Frame> grad_y;
};

LKPyramid build_lk_pyramid(const Frame& frame, int levels);

/// Pyramidal Lucas-Kanade: tracks `points` from frame_a into frame_b.
std::vector<TrackedPoint> track_points_lk(const Frame& frame_a, const Frame& frame_b, const std::vector<Point>& points,
                                          const LKConfig& config);
std::vector<TrackedPoint> track_points_lk(const LKPyramid& a, const LKPyramid& b, const std::vector<Point>& points,
                                          const LKConfig& config);

struct Step {
    double du = 0.0;
    double dv = 0.0;
};

/// Prefix sums of adjacent-frame steps; entry 0 is (0, 0).
MeasurementSeries accumulate_displacement(const std::vector<Step>& steps, double fps = 1.0);

/// Frame-to-frame tracking of seed points; each pair's step is the mean motion
/// of the points still valid. quality holds the surviving point count.
MeasurementSeries track_sequence_lk(const FrameSequence& frames, const std::vector<Point>& seeds,
                                    const LKConfig& config);

}  // namespace vibtrack::flow
