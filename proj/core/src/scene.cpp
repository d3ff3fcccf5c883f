#include "vibtrack/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "vibtrack/error.hpp"
#include "vibtrack/features.hpp"
#include "vibtrack/parallel.hpp"

namespace vibtrack::scene {
namespace {

constexpr double texture_fine = 2.0;
constexpr double texture_coarse = 6.0;
constexpr double texture_contrast = 0.25;
constexpr double background_level = 0.4;
constexpr double background_gradient = 0.05;
constexpr double background_texture = 0.02;
constexpr int required_margin = 2;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Frame smoothed_noise(int w, int h, std::uint64_t seed, double sigma) {
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Frame f(w, h);
    for (double& v : f.pixels()) v = uni(rng);
    return features::gaussian_blur(f, sigma);
}

void stretch(Frame& f, double lo, double hi) {
    const auto [mn, mx] = std::minmax_element(f.pixels().begin(), f.pixels().end());
    const double a = *mn, b = *mx;
    for (double& v : f.pixels()) v = b > a ? lo + (hi - lo) * (v - a) / (b - a) : 0.5 * (lo + hi);
}

struct Layer {
    Frame premultiplied;  // texture * alpha, padded by one transparent pixel
    Frame alpha;
};

// Band-pass noise: difference of two smoothings of one uniform field, scaled
// to a fixed standard deviation around mid-gray.
Frame make_texture(const TargetSpec& t) {
    const Frame raw = smoothed_noise(t.rect.width, t.rect.height, t.texture_seed, 0.0);
    const Frame fine = features::gaussian_blur(raw, texture_fine);
    const Frame coarse = features::gaussian_blur(raw, texture_coarse);
    Frame tex(t.rect.width, t.rect.height);
    double mean = 0.0;
    for (std::size_t i = 0; i < tex.pixels().size(); ++i) {
        tex.pixels()[i] = fine.pixels()[i] - coarse.pixels()[i];
        mean += tex.pixels()[i];
    }
    mean /= static_cast<double>(tex.pixels().size());
    double var = 0.0;
    for (double v : tex.pixels()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(tex.pixels().size()));
    for (double& v : tex.pixels()) v = std::clamp(0.5 + texture_contrast * (v - mean) / sd, 0.05, 0.95);
    return tex;
}

Layer make_layer(const TargetSpec& t) {
    const Frame tex = make_texture(t);
    Layer layer{Frame(t.rect.width + 2, t.rect.height + 2, 0.0), Frame(t.rect.width + 2, t.rect.height + 2, 0.0)};
    for (int y = 0; y < t.rect.height; ++y) {
        for (int x = 0; x < t.rect.width; ++x) {
            layer.premultiplied.at(x + 1, y + 1) = tex.at(x, y);
            layer.alpha.at(x + 1, y + 1) = 1.0;
        }
    }
    return layer;
}

Frame make_background(const Canvas& c) {
    Frame bg = smoothed_noise(c.width, c.height, c.noise_seed ^ 0x5bd1e995ULL, 2.0);
    stretch(bg, -background_texture, background_texture);
    for (int y = 0; y < c.height; ++y) {
        for (int x = 0; x < c.width; ++x) {
            bg.at(x, y) += background_level + background_gradient * x / std::max(1, c.width - 1);
        }
    }
    return bg;
}

class Renderer {
public:
    explicit Renderer(const MultiSceneSpec& spec) : spec_(spec), background_(make_background(spec.canvas)) {
        validate(spec);
        truths_ = ground_truth(spec);
        for (const auto& t : spec.targets) layers_.push_back(make_layer(t));
    }

    const std::vector<GroundTruth>& truths() const { return truths_; }

    Frame frame(int j) const {
        const Canvas& c = spec_.canvas;
        Frame out = background_;
        for (std::size_t k = 0; k < spec_.targets.size(); ++k) {
            const Rect& r = spec_.targets[k].rect;
            const Layer& layer = layers_[k];
            const double ox = r.x - 1 + truths_[k].du[static_cast<std::size_t>(j)];
            const double oy = r.y - 1 + truths_[k].dv[static_cast<std::size_t>(j)];
            const int x0 = std::max(0, static_cast<int>(std::floor(ox)));
            const int y0 = std::max(0, static_cast<int>(std::floor(oy)));
            const int x1 = std::min(c.width - 1, static_cast<int>(std::ceil(ox + layer.alpha.width() - 1)));
            const int y1 = std::min(c.height - 1, static_cast<int>(std::ceil(oy + layer.alpha.height() - 1)));
            const double max_u = layer.alpha.width() - 1;
            const double max_v = layer.alpha.height() - 1;
            for (int y = y0; y <= y1; ++y) {
                const double v = y - oy;
                if (v < 0.0 || v > max_v) continue;
                for (int x = x0; x <= x1; ++x) {
                    const double u = x - ox;
                    if (u < 0.0 || u > max_u) continue;
                    const double a = bilinear_sample(layer.alpha, u, v);
                    const double p = bilinear_sample(layer.premultiplied, u, v);
                    out.at(x, y) = p + (1.0 - a) * out.at(x, y);
                }
            }
        }
        if (c.noise_sigma > 0.0) {
            std::mt19937_64 rng(splitmix64(c.noise_seed * 0x100000001b3ULL + static_cast<std::uint64_t>(j)));
            std::normal_distribution<double> noise(0.0, c.noise_sigma);
            for (double& v : out.pixels()) v += noise(rng);
        }
        for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
        return out;
    }

private:
    const MultiSceneSpec& spec_;
    Frame background_;
    std::vector<Layer> layers_;
    std::vector<GroundTruth> truths_;
};

double max_excursion(const MotionProfile& p, const Canvas& c, double& lo, double& hi) {
    lo = 0.0;
    hi = 0.0;
    const double v0 = p.value(0, c.fps, c.n_frames);
    for (int j = 0; j < c.n_frames; ++j) {
        const double d = p.value(j, c.fps, c.n_frames) - v0;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return std::max(-lo, hi);
}

void check_profile(const MotionProfile& p, const Canvas& c, const std::string& what) {
    const double nyquist = c.fps / 2.0;
    switch (p.kind) {
        case ProfileKind::harmonic:
            if (!(p.frequency >= 0.0 && p.frequency < nyquist)) {
                throw SpecError(what + ": harmonic frequency must be below fps/2");
            }
            break;
        case ProfileKind::sweep:
            if (!(p.f_start >= 0.0 && p.f_end >= 0.0 && p.f_start < nyquist && p.f_end < nyquist)) {
                throw SpecError(what + ": sweep frequencies must be below fps/2");
            }
            break;
        case ProfileKind::tabulated:
            if (p.table.size() != static_cast<std::size_t>(c.n_frames)) {
                throw SpecError(what + ": tabulated motion needs one entry per frame");
            }
            break;
        default:
            break;
    }
}

}  // namespace

MotionProfile MotionProfile::linear(double px_per_frame) {
    MotionProfile p;
    p.kind = ProfileKind::ramp;
    p.rate = px_per_frame;
    return p;
}

MotionProfile MotionProfile::sine(double amplitude, double hz, double phase) {
    MotionProfile p;
    p.kind = ProfileKind::harmonic;
    p.amplitude = amplitude;
    p.frequency = hz;
    p.phase = phase;
    return p;
}

MotionProfile MotionProfile::chirp(double amplitude, double f_start, double f_end) {
    MotionProfile p;
    p.kind = ProfileKind::sweep;
    p.amplitude = amplitude;
    p.f_start = f_start;
    p.f_end = f_end;
    return p;
}

MotionProfile MotionProfile::tabulate(std::vector<double> values) {
    MotionProfile p;
    p.kind = ProfileKind::tabulated;
    p.table = std::move(values);
    return p;
}

double MotionProfile::value(int j, double fps, int n_frames) const {
    const double t = j / fps;
    switch (kind) {
        case ProfileKind::fixed:
            return 0.0;
        case ProfileKind::ramp:
            return rate * j;
        case ProfileKind::harmonic:
            return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
        case ProfileKind::sweep: {
            const double duration = n_frames / fps;
            const double phase_t = 2.0 * std::numbers::pi * (f_start * t + (f_end - f_start) * t * t / (2.0 * duration));
            return amplitude * std::sin(phase_t);
        }
        case ProfileKind::tabulated:
            return table.at(static_cast<std::size_t>(j));
    }
    return 0.0;
}

void validate(const MultiSceneSpec& spec) {
    const Canvas& c = spec.canvas;
    if (c.width < 1 || c.height < 1) throw SpecError("canvas dimensions must be positive");
    if (!(c.fps > 0.0)) throw SpecError("fps must be positive");
    if (c.n_frames < 1) throw SpecError("n_frames must be >= 1");
    if (!(c.noise_sigma >= 0.0)) throw SpecError("noise_sigma must be non-negative");
    if (spec.targets.empty()) throw SpecError("scene has no targets");

    struct Extent {
        double lo_x, hi_x, lo_y, hi_y;
    };
    for (const auto& t : spec.targets) {
        const std::string what = "target '" + t.label + "'";
        if (t.rect.empty()) throw SpecError(what + ": rectangle must have positive size");
        check_profile(t.motion_x, c, what);
        check_profile(t.motion_y, c, what);
        Extent e{};
        max_excursion(t.motion_x, c, e.lo_x, e.hi_x);
        max_excursion(t.motion_y, c, e.lo_y, e.hi_y);
        if (t.rect.x + e.lo_x < required_margin || t.rect.y + e.lo_y < required_margin ||
            t.rect.x + t.rect.width + e.hi_x > c.width - required_margin ||
            t.rect.y + t.rect.height + e.hi_y > c.height - required_margin) {
            throw SpecError(what + ": motion leaves the 2 px canvas margin");
        }
    }
    if (spec.targets.size() > 1) {
        const auto truths = ground_truth(spec);
        for (int j = 0; j < c.n_frames; ++j) {
            for (std::size_t a = 0; a < spec.targets.size(); ++a) {
                for (std::size_t b = a + 1; b < spec.targets.size(); ++b) {
                    const BoxF ba = target_box(spec.targets[a], truths[a], static_cast<std::size_t>(j));
                    const BoxF bb = target_box(spec.targets[b], truths[b], static_cast<std::size_t>(j));
                    // Closed intervals: touching boxes count as overlapping.
                    if (ba.x <= bb.x + bb.w && bb.x <= ba.x + ba.w && ba.y <= bb.y + bb.h && bb.y <= ba.y + ba.h) {
                        throw SpecError("targets '" + spec.targets[a].label + "' and '" + spec.targets[b].label +
                                        "' overlap at frame " + std::to_string(j));
                    }
                }
            }
        }
    }
}

std::vector<GroundTruth> ground_truth(const MultiSceneSpec& spec) {
    const Canvas& c = spec.canvas;
    std::vector<GroundTruth> out;
    for (const auto& t : spec.targets) {
        GroundTruth g{t.label, c.fps, std::vector<double>(static_cast<std::size_t>(c.n_frames)),
                      std::vector<double>(static_cast<std::size_t>(c.n_frames))};
        const double x0 = t.motion_x.value(0, c.fps, c.n_frames);
        const double y0 = t.motion_y.value(0, c.fps, c.n_frames);
        for (int j = 0; j < c.n_frames; ++j) {
            g.du[static_cast<std::size_t>(j)] = t.motion_x.value(j, c.fps, c.n_frames) - x0;
            g.dv[static_cast<std::size_t>(j)] = t.motion_y.value(j, c.fps, c.n_frames) - y0;
        }
        out.push_back(std::move(g));
    }
    return out;
}

BoxF target_box(const TargetSpec& target, const GroundTruth& truth, std::size_t j) {
    return {target.rect.x + truth.du.at(j), target.rect.y + truth.dv.at(j), static_cast<double>(target.rect.width),
            static_cast<double>(target.rect.height)};
}

Frame render_frame(const MultiSceneSpec& spec, int j) {
    if (j < 0 || j >= spec.canvas.n_frames) throw InvalidArgument("frame index outside the scene");
    return Renderer(spec).frame(j);
}

std::pair<FrameSequence, std::vector<GroundTruth>> multi_target_scene(const MultiSceneSpec& spec) {
    const Renderer renderer(spec);
    std::vector<Frame> frames(static_cast<std::size_t>(spec.canvas.n_frames));
    for (int j = 0; j < spec.canvas.n_frames; ++j) frames[static_cast<std::size_t>(j)] = renderer.frame(j);
    return {FrameSequence(std::move(frames), spec.canvas.fps), renderer.truths()};
}

std::pair<FrameSequence, GroundTruth> render_scene(const SceneSpec& spec) {
    auto [frames, truths] = multi_target_scene({"", spec.canvas, {spec.target}});
    return {std::move(frames), std::move(truths.front())};
}

std::string format_trimmed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
    out << "t,du,dv\n";
    for (std::size_t j = 0; j < truth.du.size(); ++j) {
        out << format_trimmed(static_cast<double>(j) / truth.fps) << ',' << format_trimmed(truth.du[j]) << ','
            << format_trimmed(truth.dv[j]) << '\n';
    }
}

namespace {

using nlohmann::json;

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
    return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

MotionProfile parse_motion(const json& j, const std::string& where) {
    if (j.is_null()) return MotionProfile::still();
    const auto kind = field<std::string>(j, "kind", where);
    if (kind == "static") return MotionProfile::still();
    if (kind == "ramp") return MotionProfile::linear(field<double>(j, "rate", where));
    if (kind == "harmonic") {
        return MotionProfile::sine(field<double>(j, "amplitude", where), field<double>(j, "frequency", where),
                                   field_or<double>(j, "phase", 0.0, where));
    }
    if (kind == "sweep") {
        return MotionProfile::chirp(field<double>(j, "amplitude", where), field<double>(j, "f_start", where),
                                    field<double>(j, "f_end", where));
    }
    if (kind == "tabulated") return MotionProfile::tabulate(field<std::vector<double>>(j, "values", where));
    throw ParseError(where + ": unknown motion kind '" + kind + "'");
}

}  // namespace

MultiSceneSpec parse_scene_spec(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scene spec is not valid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) throw ParseError("scene spec must be a JSON object");
    MultiSceneSpec spec;
    spec.name = field_or<std::string>(doc, "name", "scene", "scene");
    const json canvas = doc.value("canvas", json::object());
    spec.canvas.width = field<int>(canvas, "width", "canvas");
    spec.canvas.height = field<int>(canvas, "height", "canvas");
    spec.canvas.fps = field<double>(doc, "fps", "scene");
    spec.canvas.n_frames = field<int>(doc, "n_frames", "scene");
    spec.canvas.noise_sigma = field_or<double>(doc, "noise_sigma", 0.0, "scene");
    spec.canvas.noise_seed = field_or<std::uint64_t>(doc, "noise_seed", 1, "scene");
    if (!doc.contains("targets") || !doc["targets"].is_array()) throw ParseError("scene: 'targets' must be an array");
    std::size_t index = 0;
    for (const auto& t : doc["targets"]) {
        const std::string where = "targets[" + std::to_string(index++) + "]";
        TargetSpec target;
        target.label = field_or<std::string>(t, "label", "target", where);
        const auto rect = field<std::vector<int>>(t, "rect", where);
        if (rect.size() != 4) throw ParseError(where + ": 'rect' must be [x, y, w, h]");
        target.rect = {rect[0], rect[1], rect[2], rect[3]};
        target.texture_seed = field_or<std::uint64_t>(t, "texture_seed", index, where);
        target.motion_x = parse_motion(t.value("motion_x", json()), where + ".motion_x");
        target.motion_y = parse_motion(t.value("motion_y", json()), where + ".motion_y");
        spec.targets.push_back(std::move(target));
    }
    validate(spec);
    return spec;
}

MultiSceneSpec load_scene_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scene spec " + path.string());
    return parse_scene_spec(in);
}

std::vector<std::filesystem::path> write_scene(const MultiSceneSpec& spec, const std::filesystem::path& dir,
                                               unsigned threads) {
    const Renderer renderer(spec);
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written(static_cast<std::size_t>(spec.canvas.n_frames));
    parallel_for(written.size(), threads, [&](std::size_t j) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%06zu.pgm", j);
        written[j] = dir / name;
        save_pgm(renderer.frame(static_cast<int>(j)), written[j]);
    });
    auto write_truth = [&](const GroundTruth& g, const std::string& file) {
        std::ofstream out(dir / file);
        if (!out) throw Error("cannot write " + (dir / file).string());
        write_truth_csv(out, g);
        written.push_back(dir / file);
    };
    write_truth(renderer.truths().front(), "truth.csv");
    if (renderer.truths().size() > 1) {
        for (const auto& g : renderer.truths()) write_truth(g, "truth_" + g.label + ".csv");
    }
    return written;
}

}  // namespace vibtrack::scene
