#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace vibtrack {

/// Integer pixel rectangle, top-left origin.
struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool empty() const noexcept { return width <= 0 || height <= 0; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Grayscale raster with intensities in [0, 1], row-major.
///
/// Pixel (0, 0) is the center of the top-left pixel; x grows to the right and
/// y grows downward.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, double fill = 0.0);
    Frame(int width, int height, std::vector<double> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const double> pixels() const noexcept { return pixels_; }
    std::span<double> pixels() noexcept { return pixels_; }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

/// Frames sharing one size, with the source index of each frame.
class FrameSequence {
public:
    FrameSequence() = default;
    FrameSequence(std::vector<Frame> frames, double fps, std::vector<long> frame_indices = {});

    std::size_t size() const noexcept { return frames_.size(); }
    bool empty() const noexcept { return frames_.empty(); }
    double fps() const noexcept { return fps_; }
    const Frame& operator[](std::size_t i) const { return frames_[i]; }
    Frame& operator[](std::size_t i) { return frames_[i]; }
    const std::vector<Frame>& frames() const noexcept { return frames_; }
    const std::vector<long>& frame_indices() const noexcept { return frame_indices_; }
    int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
    int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }

private:
    std::vector<Frame> frames_;
    double fps_ = 0.0;
    std::vector<long> frame_indices_;
};

/// Region extracted by crop(); offset is the crop origin in source coordinates.
struct Crop {
    Frame frame;
    int offset_x = 0;
    int offset_y = 0;
};

Frame load_pgm(std::span<const std::uint8_t> bytes);
Frame load_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> save_pgm(const Frame& frame);
void save_pgm(const Frame& frame, const std::filesystem::path& path);

/// Loads every frame_*.pgm in `dir` sorted by name. The numeric suffix of
/// each file name becomes its frame index.
FrameSequence load_frame_directory(const std::filesystem::path& dir, double fps);

/// Bilinear interpolation. Throws InvalidArgument outside
/// [0, width-1] x [0, height-1].
double bilinear_sample(const Frame& frame, double x, double y);

/// Clamped intersection of `rect` with the frame. Throws on empty intersection.
Crop crop(const Frame& frame, const Rect& rect);

std::uint8_t quantize(double intensity) noexcept;

}  // namespace vibtrack
