#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vibtrack/image.hpp"

namespace vibtrack::scene {

enum class ProfileKind { fixed, ramp, harmonic, sweep, tabulated };

/// Translation of a target along one axis as a function of frame index.
struct MotionProfile {
    ProfileKind kind = ProfileKind::fixed;
    double rate = 0.0;       ///< ramp: px per frame
    double amplitude = 0.0;  ///< harmonic and sweep: px
    double frequency = 0.0;  ///< harmonic: Hz
    double phase = 0.0;      ///< harmonic: rad
    double f_start = 0.0;    ///< sweep: Hz
    double f_end = 0.0;      ///< sweep: Hz
    std::vector<double> table;  ///< tabulated: one value per frame

    static MotionProfile still() { return {}; }
    static MotionProfile linear(double px_per_frame);
    static MotionProfile sine(double amplitude, double hz, double phase = 0.0);
    static MotionProfile chirp(double amplitude, double f_start, double f_end);
    static MotionProfile tabulate(std::vector<double> values);

    /// Raw profile value at frame j of an n_frames sequence sampled at fps.
    double value(int j, double fps, int n_frames) const;
};

struct TargetSpec {
    std::string label = "target";
    Rect rect;
    std::uint64_t texture_seed = 1;
    MotionProfile motion_x;
    MotionProfile motion_y;
};

/// Shared canvas and sampling parameters.
struct Canvas {
    int width = 320;
    int height = 240;
    double fps = 30.0;
    int n_frames = 1;
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 1;
};

struct SceneSpec {
    Canvas canvas;
    TargetSpec target;
};

struct MultiSceneSpec {
    std::string name;
    Canvas canvas;
    std::vector<TargetSpec> targets;
};

/// True per-frame displacement relative to frame 0.
struct GroundTruth {
    std::string label;
    double fps = 0.0;
    std::vector<double> du;
    std::vector<double> dv;
};

/// Checks margins, Nyquist limits, table lengths and (for several targets)
/// non-overlap at every frame. Throws SpecError.
void validate(const MultiSceneSpec& spec);

std::pair<FrameSequence, GroundTruth> render_scene(const SceneSpec& spec);

std::pair<FrameSequence, std::vector<GroundTruth>> multi_target_scene(const MultiSceneSpec& spec);

/// Renders only frame j; frames depend on nothing but (spec, j).
Frame render_frame(const MultiSceneSpec& spec, int j);

/// Per-target displacement tables (no rendering).
std::vector<GroundTruth> ground_truth(const MultiSceneSpec& spec);

/// Target rectangle displaced to frame j as real-valued (x, y, w, h).
struct BoxF {
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};
BoxF target_box(const TargetSpec& target, const GroundTruth& truth, std::size_t j);

/// "t,du,dv" with t = j / fps; numbers rounded to 6 decimals with trailing
/// zeros dropped.
void write_truth_csv(std::ostream& out, const GroundTruth& truth);

MultiSceneSpec parse_scene_spec(std::istream& in);
MultiSceneSpec load_scene_spec(const std::filesystem::path& path);

/// Writes frame_%06d.pgm for every frame plus truth CSVs; returns the paths written.
std::vector<std::filesystem::path> write_scene(const MultiSceneSpec& spec, const std::filesystem::path& dir,
                                               unsigned threads = 1);

std::string format_trimmed(double value, int decimals = 6);

}  // namespace vibtrack::scene
