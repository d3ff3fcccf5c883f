#include "vibtrack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "vibtrack/error.hpp"
#include "vibtrack/parallel.hpp"

namespace vibtrack::tracking {

std::string mode_name(TrackerMode mode) {
    switch (mode) {
        case TrackerMode::bbox_only:
            return "bbox_only";
        case TrackerMode::bbox_plus_keypoints:
            return "bbox_plus_keypoints";
        case TrackerMode::lk_baseline:
            return "lk_baseline";
    }
    return "unknown";
}

TrackerMode parse_mode(const std::string& name) {
    if (name == "bbox_only") return TrackerMode::bbox_only;
    if (name == "bbox_plus_keypoints") return TrackerMode::bbox_plus_keypoints;
    if (name == "lk_baseline") return TrackerMode::lk_baseline;
    throw InvalidArgument("unknown tracker mode '" + name + "'");
}

Rect inflate(const detect::BBox& box, double margin) {
    const double w = box.w * (1.0 + margin);
    const double h = box.h * (1.0 + margin);
    const double x0 = box.center_x() - 0.5 * w;
    const double y0 = box.center_y() - 0.5 * h;
    const int ix = static_cast<int>(std::floor(x0));
    const int iy = static_cast<int>(std::floor(y0));
    return {ix, iy, static_cast<int>(std::ceil(x0 + w)) - ix, static_cast<int>(std::ceil(y0 + h)) - iy};
}

namespace {

detect::BoxTrack box_track(const FrameSequence& frames, const detect::DetectionSet& detections,
                           const TrackingConfig& config) {
    return detect::associate(detections.detections, config.association, frames.frame_indices());
}

MeasurementSeries keypoint_series(const FrameSequence& frames, const detect::BoxTrack& track,
                                  const TrackingConfig& config) {
    const MeasurementSeries boxes = detect::bbox_translation(track, frames.fps());
    const Crop anchor = crop(frames[0], inflate(track.entries[0].bbox, config.crop_margin));
    const features::FeatureSet anchor_features = features::extract_features(anchor.frame, config.scale_space);

    MeasurementSeries series = boxes;
    series.samples[0] = {0.0, 0.0, 0.0, static_cast<int>(anchor_features.keypoints.size()), false};
    parallel_for(frames.size() - 1, config.threads, [&](std::size_t i) {
        const std::size_t j = i + 1;
        MeasurementSample& out = series.samples[j];
        auto fall_back = [&] {
            out.du = boxes.samples[j].du;
            out.dv = boxes.samples[j].dv;
            out.quality = 0;
            out.fallback = true;
        };
        const Crop current = crop(frames[j], inflate(track.entries[j].bbox, config.crop_margin));
        const features::FeatureSet feats = features::extract_features(current.frame, config.scale_space);
        if (anchor_features.descriptors.empty() || feats.descriptors.size() < 2) return fall_back();
        const auto matches = features::match_descriptors(anchor_features.keypoints, anchor_features.descriptors,
                                                         feats.keypoints, feats.descriptors, config.match_ratio);
        if (matches.empty()) return fall_back();
        std::vector<features::Match> kept;
        try {
            kept = features::filter_matches_by_motion(matches, config.motion_radius, config.top_k);
        } catch (const ConsensusError&) {
            return fall_back();
        }
        if (kept.size() < config.min_matches) return fall_back();
        const auto avg = features::average_displacement(kept);
        out.du = avg.du + (current.offset_x - anchor.offset_x);
        out.dv = avg.dv + (current.offset_y - anchor.offset_y);
        out.quality = static_cast<int>(kept.size());
        out.fallback = false;
    });
    return series;
}

}  // namespace

std::vector<flow::Point> seed_points(const Frame& frame, const Rect& region, const TrackingConfig& config) {
    const Crop roi = crop(frame, region);
    const features::FeatureSet feats = features::extract_features(roi.frame, config.scale_space);
    // Several orientations share one location; keep the strongest per location.
    std::vector<features::Keypoint> kps = feats.keypoints;
    std::sort(kps.begin(), kps.end(), [](const auto& a, const auto& b) {
        return std::make_tuple(-std::abs(a.response), a.y, a.x) < std::make_tuple(-std::abs(b.response), b.y, b.x);
    });
    const int margin = config.lk.window_radius + 1;
    std::vector<flow::Point> out;
    for (const auto& k : kps) {
        const flow::Point p{k.x + roi.offset_x, k.y + roi.offset_y};
        if (p.x < margin || p.y < margin || p.x > frame.width() - 1 - margin || p.y > frame.height() - 1 - margin) {
            continue;
        }
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const flow::Point& q) {
            return std::abs(q.x - p.x) < 1e-9 && std::abs(q.y - p.y) < 1e-9;
        });
        if (duplicate) continue;
        out.push_back(p);
        if (out.size() == config.max_seed_points) break;
    }
    return out;
}

MeasurementSeries measure_target(const FrameSequence& frames, const std::optional<detect::DetectionSet>& detections,
                                 TrackerMode mode, const TrackingConfig& config) {
    if (frames.empty()) throw InvalidArgument("no frames to measure");
    switch (mode) {
        case TrackerMode::bbox_only: {
            if (!detections) throw InvalidArgument("bbox_only mode requires a detection file");
            return detect::bbox_translation(box_track(frames, *detections, config), frames.fps());
        }
        case TrackerMode::bbox_plus_keypoints: {
            if (!detections) throw InvalidArgument("bbox_plus_keypoints mode requires a detection file");
            return keypoint_series(frames, box_track(frames, *detections, config), config);
        }
        case TrackerMode::lk_baseline: {
            Rect region;
            if (config.seed_region) {
                region = *config.seed_region;
            } else if (detections) {
                const auto track = box_track(frames, *detections, config);
                const auto& b = track.entries.front().bbox;
                region = inflate(b, 0.0);
            } else {
                throw InvalidArgument("lk_baseline mode requires a seed region or a detection file");
            }
            const auto seeds = seed_points(frames[0], region, config);
            if (seeds.empty()) throw TrackingError("no trackable seed points in the seed region", 0);
            return flow::track_sequence_lk(frames, seeds, config.lk);
        }
    }
    throw InvalidArgument("unknown tracker mode");
}

std::vector<TargetResult> measure_multi(const FrameSequence& frames,
                                        const std::optional<detect::DetectionSet>& detections,
                                        const std::vector<std::string>& labels, TrackerMode mode,
                                        const TrackingConfig& config) {
    std::vector<TargetResult> out;
    for (const auto& label : labels) {
        TrackingConfig cfg = config;
        cfg.association.label = label;
        TargetResult result{label, {}, {}};
        try {
            result.series = measure_target(frames, detections, mode, cfg);
        } catch (const Error& e) {
            result.error = e.what();
        }
        out.push_back(std::move(result));
    }
    return out;
}

}  // namespace vibtrack::tracking
