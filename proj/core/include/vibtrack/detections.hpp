#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vibtrack/series.hpp"

namespace vibtrack::detect {

struct BBox {
    double x = 0.0;  ///< top-left
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double center_x() const noexcept { return x + 0.5 * w; }
    double center_y() const noexcept { return y + 0.5 * h; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Column-major run-length mask in the compressed text form used by COCO
/// tooling. size is (height, width) of the bbox extent.
struct Mask {
    std::string counts;
    int height = 0;
    int width = 0;

    friend bool operator==(const Mask&, const Mask&) = default;
};

struct Detection {
    long frame_index = 0;
    BBox bbox;
    double score = 0.0;
    std::string label;
    std::optional<Mask> mask;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
    double fps = 0.0;
    std::vector<Detection> detections;
};

/// Parses and validates a detection file. Errors name the record index and field.
DetectionSet parse_detections(std::istream& in);
DetectionSet load_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out, const DetectionSet& set);

/// Run lengths of a compressed RLE string (alternating background/foreground,
/// starting with background).
std::vector<std::uint32_t> decode_rle_counts(const std::string& counts);
std::string encode_rle_counts(const std::vector<std::uint32_t>& runs);

enum class Provenance { detected, interpolated, held };

struct TrackEntry {
    long frame_index = 0;
    BBox bbox;
    double score = 0.0;
    std::string label;
    Provenance provenance = Provenance::detected;
};

/// Exactly one entry per frame of the sequence.
struct BoxTrack {
    std::vector<TrackEntry> entries;
};

struct AssociationPolicy {
    /// Required when the file holds more than one label.
    std::optional<std::string> label;
    double score_threshold = 0.5;
    std::size_t max_gap = 15;
};

/// Follows one target through the sequence: per frame, the surviving detection
/// whose center is nearest the previously chosen center. Gaps are interpolated
/// (interior) or held (tail); a gap longer than max_gap is a tracking loss.
BoxTrack associate(const std::vector<Detection>& detections, const AssociationPolicy& policy,
                   const std::vector<long>& frame_indices);

/// Center displacement of every entry relative to entry 0.
MeasurementSeries bbox_translation(const BoxTrack& track, double fps);

}  // namespace vibtrack::detect
