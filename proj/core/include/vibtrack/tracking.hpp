#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vibtrack/detections.hpp"
#include "vibtrack/features.hpp"
#include "vibtrack/flow.hpp"
#include "vibtrack/image.hpp"
#include "vibtrack/series.hpp"

namespace vibtrack::tracking {

enum class TrackerMode { bbox_only, bbox_plus_keypoints, lk_baseline };

std::string mode_name(TrackerMode mode);
TrackerMode parse_mode(const std::string& name);

struct TrackingConfig {
    features::ScaleSpaceConfig scale_space;
    double match_ratio = 0.75;
    double motion_radius = 2.0;
    std::size_t top_k = 20;
    std::size_t min_matches = 4;
    /// Fractional growth of the box (split evenly between opposite sides)
    /// before cropping for keypoint matching.
    double crop_margin = 0.2;

    flow::LKConfig lk;
    /// LK seed region; defaults to the frame-0 detection box.
    std::optional<Rect> seed_region;
    std::size_t max_seed_points = 50;

    detect::AssociationPolicy association;
    unsigned threads = 1;
};

/// Integer crop rectangle covering the box grown by `margin`.
Rect inflate(const detect::BBox& box, double margin);

/// Displacement series of one target relative to frame 0.
MeasurementSeries measure_target(const FrameSequence& frames, const std::optional<detect::DetectionSet>& detections,
                                 TrackerMode mode, const TrackingConfig& config);

struct TargetResult {
    std::string label;
    MeasurementSeries series;
    /// Empty on success.
    std::string error;

    bool ok() const noexcept { return error.empty(); }
};

/// measure_target per label, in input order; one label's failure does not
/// affect the others.
std::vector<TargetResult> measure_multi(const FrameSequence& frames,
                                        const std::optional<detect::DetectionSet>& detections,
                                        const std::vector<std::string>& labels, TrackerMode mode,
                                        const TrackingConfig& config);

/// LK seed points: keypoint locations inside `region` of the frame with room
/// for the LK window, strongest first.
std::vector<flow::Point> seed_points(const Frame& frame, const Rect& region, const TrackingConfig& config);

}  // namespace vibtrack::tracking
