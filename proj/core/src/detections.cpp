#include "vibtrack/detections.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "vibtrack/error.hpp"

namespace vibtrack::detect {

using nlohmann::json;

std::vector<std::uint32_t> decode_rle_counts(const std::string& counts) {
    std::vector<long long> runs;
    std::size_t p = 0;
    while (p < counts.size()) {
        long long x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= counts.size()) throw ParseError("RLE string ends inside a run", p);
            const int c = static_cast<unsigned char>(counts[p]) - 48;
            if (c < 0 || c > 63) throw ParseError("invalid RLE character", p);
            x |= static_cast<long long>(c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10)) x |= -1LL << (5 * k);
            if (k > 12) throw ParseError("RLE run too long", p);
        }
        if (runs.size() > 2) x += runs[runs.size() - 2];
        if (x < 0) throw ParseError("negative RLE run", p);
        runs.push_back(x);
    }
    return {runs.begin(), runs.end()};
}

std::string encode_rle_counts(const std::vector<std::uint32_t>& runs) {
    std::string out;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        long long x = runs[i];
        if (i > 2) x -= runs[i - 2];
        bool more = true;
        while (more) {
            int c = static_cast<int>(x & 0x1f);
            x >>= 5;
            more = (c & 0x10) ? x != -1 : x != 0;
            if (more) c |= 0x20;
            out.push_back(static_cast<char>(c + 48));
        }
    }
    return out;
}

namespace {

[[noreturn]] void schema_error(std::size_t record, const std::string& field, const std::string& why) {
    throw ParseError("detections[" + std::to_string(record) + "]." + field + ": " + why);
}

double number_field(const json& rec, const char* key, std::size_t index) {
    if (!rec.contains(key)) schema_error(index, key, "missing");
    const json& v = rec.at(key);
    if (!v.is_number()) schema_error(index, key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(index, key, "must be finite");
    return d;
}

Detection parse_record(const json& rec, std::size_t index) {
    if (!rec.is_object()) schema_error(index, "", "record must be an object");
    Detection d;
    if (!rec.contains("frame_index")) schema_error(index, "frame_index", "missing");
    if (!rec["frame_index"].is_number_integer() || rec["frame_index"].get<long long>() < 0) {
        schema_error(index, "frame_index", "must be a non-negative integer");
    }
    d.frame_index = rec["frame_index"].get<long>();

    if (!rec.contains("bbox")) schema_error(index, "bbox", "missing");
    const json& box = rec["bbox"];
    if (!box.is_array() || box.size() != 4 ||
        !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); })) {
        schema_error(index, "bbox", "must be [x, y, w, h] numbers");
    }
    d.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
    if (!(d.bbox.w > 0.0 && d.bbox.h > 0.0) || !std::isfinite(d.bbox.x) || !std::isfinite(d.bbox.y) ||
        !std::isfinite(d.bbox.w) || !std::isfinite(d.bbox.h)) {
        schema_error(index, "bbox", "width and height must be positive");
    }

    d.score = number_field(rec, "score", index);
    if (d.score < 0.0 || d.score > 1.0) schema_error(index, "score", "must be in [0, 1]");

    if (!rec.contains("label")) schema_error(index, "label", "missing");
    if (!rec["label"].is_string()) schema_error(index, "label", "must be a string");
    d.label = rec["label"].get<std::string>();

    if (rec.contains("mask") && !rec["mask"].is_null()) {
        const json& m = rec["mask"];
        if (!m.is_object() || !m.contains("counts") || !m["counts"].is_string()) {
            schema_error(index, "mask.counts", "must be an RLE string");
        }
        if (!m.contains("size") || !m["size"].is_array() || m["size"].size() != 2 ||
            !m["size"][0].is_number_integer() || !m["size"][1].is_number_integer()) {
            schema_error(index, "mask.size", "must be [height, width] integers");
        }
        Mask mask{m["counts"].get<std::string>(), m["size"][0].get<int>(), m["size"][1].get<int>()};
        const int want_h = static_cast<int>(std::ceil(d.bbox.h));
        const int want_w = static_cast<int>(std::ceil(d.bbox.w));
        if (mask.height != want_h || mask.width != want_w) {
            schema_error(index, "mask.size", "must equal the ceiled bbox extent [" + std::to_string(want_h) + ", " +
                                                 std::to_string(want_w) + "]");
        }
        std::vector<std::uint32_t> runs;
        try {
            runs = decode_rle_counts(mask.counts);
        } catch (const ParseError& e) {
            schema_error(index, "mask.counts", e.what());
        }
        unsigned long long cells = 0;
        for (auto r : runs) cells += r;
        if (cells != static_cast<unsigned long long>(want_h) * static_cast<unsigned long long>(want_w)) {
            schema_error(index, "mask.counts", "decodes to " + std::to_string(cells) + " cells, expected " +
                                                   std::to_string(want_h * want_w));
        }
        d.mask = std::move(mask);
    }
    return d;
}

}  // namespace

DetectionSet parse_detections(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("detection file is not valid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) throw ParseError("detection file must hold one top-level object");
    DetectionSet set;
    if (!doc.contains("fps") || !doc["fps"].is_number() || !(doc["fps"].get<double>() > 0.0)) {
        throw ParseError("detection file: 'fps' must be a positive number");
    }
    set.fps = doc["fps"].get<double>();
    if (!doc.contains("detections") || !doc["detections"].is_array()) {
        throw ParseError("detection file: 'detections' must be an array");
    }
    std::size_t index = 0;
    for (const auto& rec : doc["detections"]) set.detections.push_back(parse_record(rec, index++));
    return set;
}

DetectionSet load_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open detection file " + path.string());
    try {
        return parse_detections(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_detections(std::ostream& out, const DetectionSet& set) {
    json doc;
    doc["fps"] = set.fps;
    json list = json::array();
    for (const auto& d : set.detections) {
        json rec;
        rec["frame_index"] = d.frame_index;
        rec["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
        rec["score"] = d.score;
        rec["label"] = d.label;
        if (d.mask) rec["mask"] = {{"counts", d.mask->counts}, {"size", {d.mask->height, d.mask->width}}};
        list.push_back(std::move(rec));
    }
    doc["detections"] = std::move(list);
    out << doc.dump(1) << '\n';
}

namespace {

// Total order used to break ties so the chosen instance never depends on the
// order of records in the file.
bool prefer(const Detection& a, const Detection& b, double da, double db) {
    return std::make_tuple(da, -a.score, a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h) <
           std::make_tuple(db, -b.score, b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h);
}

BBox lerp(const BBox& a, const BBox& b, double t) {
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.w + t * (b.w - a.w), a.h + t * (b.h - a.h)};
}

}  // namespace

BoxTrack associate(const std::vector<Detection>& detections, const AssociationPolicy& policy,
                   const std::vector<long>& frame_indices) {
    std::set<std::string> labels;
    for (const auto& d : detections) labels.insert(d.label);
    if (!policy.label && labels.size() > 1) {
        throw InvalidArgument("detections carry several labels; a target label must be selected");
    }
    std::vector<long> frames = frame_indices;
    if (frames.empty()) {
        long last = -1;
        for (const auto& d : detections) last = std::max(last, d.frame_index);
        for (long f = 0; f <= last; ++f) frames.push_back(f);
    }
    if (frames.empty()) throw AnchorError("no frames and no detections to anchor on", 0);

    std::map<long, std::size_t> position;
    for (std::size_t i = 0; i < frames.size(); ++i) position[frames[i]] = i;
    std::vector<std::vector<const Detection*>> per_frame(frames.size());
    for (const auto& d : detections) {
        if (policy.label && d.label != *policy.label) continue;
        if (d.score < policy.score_threshold) continue;
        auto it = position.find(d.frame_index);
        if (it != position.end()) per_frame[it->second].push_back(&d);
    }
    if (per_frame[0].empty()) {
        throw AnchorError("no detection" + (policy.label ? " labelled '" + *policy.label + "'" : std::string()) +
                              " in the anchor frame",
                          0);
    }

    BoxTrack track;
    track.entries.resize(frames.size());
    std::vector<bool> found(frames.size(), false);
    double prev_cx = 0.0, prev_cy = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Detection* best = nullptr;
        double best_d = 0.0;
        for (const Detection* d : per_frame[i]) {
            const double dist = have_prev ? std::hypot(d->bbox.center_x() - prev_cx, d->bbox.center_y() - prev_cy) : 0.0;
            if (!best || prefer(*d, *best, dist, best_d)) {
                best = d;
                best_d = dist;
            }
        }
        if (!best) continue;
        found[i] = true;
        track.entries[i] = {frames[i], best->bbox, best->score, best->label, Provenance::detected};
        prev_cx = best->bbox.center_x();
        prev_cy = best->bbox.center_y();
        have_prev = true;
    }

    std::size_t last = 0;
    for (std::size_t i = 1; i <= frames.size(); ++i) {
        if (i < frames.size() && !found[i]) continue;
        const std::size_t gap = i - last - 1;
        if (gap > policy.max_gap) throw TrackingError("target lost for " + std::to_string(gap) + " frames", last + 1);
        for (std::size_t k = last + 1; k < i; ++k) {
            TrackEntry& e = track.entries[k];
            e = track.entries[last];
            e.frame_index = frames[k];
            if (i < frames.size()) {
                const double t = static_cast<double>(k - last) / static_cast<double>(i - last);
                e.bbox = lerp(track.entries[last].bbox, track.entries[i].bbox, t);
                e.score = 0.0;
                e.provenance = Provenance::interpolated;
            } else {
                e.provenance = Provenance::held;
            }
        }
        last = i;
    }
    return track;
}

MeasurementSeries bbox_translation(const BoxTrack& track, double fps) {
    if (track.entries.empty()) throw InvalidArgument("empty box track");
    std::vector<double> du, dv;
    const double cx0 = track.entries.front().bbox.center_x();
    const double cy0 = track.entries.front().bbox.center_y();
    for (const auto& e : track.entries) {
        du.push_back(e.bbox.center_x() - cx0);
        dv.push_back(e.bbox.center_y() - cy0);
    }
    return make_series(fps, du, dv);
}

}  // namespace vibtrack::detect
