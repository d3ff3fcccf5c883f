#include "vibtrack/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <regex>

#include "vibtrack/error.hpp"

namespace vibtrack {

Frame::Frame(int width, int height, double fill) : Frame(width, height, std::vector<double>(
    static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill)) {}

Frame::Frame(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("frame dimensions must be positive, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("pixel buffer size does not match frame dimensions");
    }
}

FrameSequence::FrameSequence(std::vector<Frame> frames, double fps, std::vector<long> frame_indices)
    : frames_(std::move(frames)), fps_(fps), frame_indices_(std::move(frame_indices)) {
    if (!(fps_ > 0.0)) {
        throw InvalidArgument("frame rate must be positive");
    }
    if (frame_indices_.empty()) {
        frame_indices_.resize(frames_.size());
        for (std::size_t i = 0; i < frames_.size(); ++i) frame_indices_[i] = static_cast<long>(i);
    }
    if (frame_indices_.size() != frames_.size()) {
        throw InvalidArgument("frame index list length differs from frame count");
    }
    for (std::size_t i = 1; i < frame_indices_.size(); ++i) {
        if (frame_indices_[i] <= frame_indices_[i - 1]) {
            throw InvalidArgument("frame indices must be strictly increasing");
        }
    }
    for (const Frame& f : frames_) {
        if (f.width() != frames_.front().width() || f.height() != frames_.front().height()) {
            throw InvalidArgument("all frames in a sequence must share one size");
        }
    }
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Skips whitespace and '#' comments, then reads one token.
    std::string token() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
        if (start == pos_) throw ParseError("PGM header ended early", start);
        return {bytes_.begin() + static_cast<std::ptrdiff_t>(start), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)};
    }

    long number(const char* field) {
        const std::size_t start = pos_;
        const std::string tok = token();
        if (!std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }) || tok.size() > 9) {
            throw ParseError(std::string("PGM header field '") + field + "' is not a valid integer", start);
        }
        return std::stol(tok);
    }

    std::size_t pos() const noexcept { return pos_; }
    void advance() noexcept { ++pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Frame load_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw ParseError("not a binary PGM file (expected magic P5)", 0);
    }
    HeaderReader reader(bytes.subspan(2));
    const long width = reader.number("width");
    const long height = reader.number("height");
    const std::size_t maxval_offset = reader.pos() + 2;
    const long maxval = reader.number("maxval");
    if (width < 1 || height < 1) throw ParseError("PGM dimensions must be positive", 2);
    if (maxval < 1 || maxval > 255) {
        throw ParseError("PGM maxval must be in [1, 255], got " + std::to_string(maxval), maxval_offset);
    }
    // Exactly one whitespace byte separates the header from the raster.
    std::size_t data = reader.pos() + 2;
    if (data >= bytes.size() || !std::isspace(bytes[data])) {
        throw ParseError("PGM header not terminated by whitespace", data);
    }
    ++data;
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - data < count) {
        throw ParseError("truncated PGM payload: expected " + std::to_string(count) + " bytes, found " +
                             std::to_string(bytes.size() - data),
                         bytes.size());
    }
    std::vector<double> pixels(count);
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < count; ++i) {
        const auto raw = bytes[data + i];
        if (raw > maxval) throw ParseError("PGM sample exceeds maxval", data + i);
        pixels[i] = raw * scale;
    }
    return Frame(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

Frame load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return load_pgm(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::uint8_t quantize(double intensity) noexcept {
    const double v = std::floor(std::clamp(intensity, 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(v);
}

std::vector<std::uint8_t> save_pgm(const Frame& frame) {
    const std::string header =
        "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + frame.pixels().size());
    for (double v : frame.pixels()) out.push_back(quantize(v));
    return out;
}

void save_pgm(const Frame& frame, const std::filesystem::path& path) {
    const auto bytes = save_pgm(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FrameSequence load_frame_directory(const std::filesystem::path& dir, double fps) {
    if (!std::filesystem::is_directory(dir)) throw Error("frame directory not found: " + dir.string());
    static const std::regex pattern(R"(frame_(\d+)\.pgm)");
    std::vector<std::pair<long, std::filesystem::path>> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && std::regex_match(name, m, pattern)) {
            files.emplace_back(std::stol(m[1].str()), entry.path());
        }
    }
    if (files.empty()) throw Error("no frame_*.pgm files in " + dir.string());
    std::sort(files.begin(), files.end());
    std::vector<Frame> frames;
    std::vector<long> indices;
    frames.reserve(files.size());
    for (const auto& [index, path] : files) {
        frames.push_back(load_pgm(path));
        indices.push_back(index);
    }
    return FrameSequence(std::move(frames), fps, std::move(indices));
}

double bilinear_sample(const Frame& frame, double x, double y) {
    const double max_x = frame.width() - 1;
    const double max_y = frame.height() - 1;
    if (!(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y)) {
        throw InvalidArgument("bilinear sample outside frame domain");
    }
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    // Keep the 2x2 stencil inside the frame on the last row/column.
    if (x0 == frame.width() - 1 && x0 > 0) --x0;
    if (y0 == frame.height() - 1 && y0 > 0) --y0;
    const double fx = x - x0;
    const double fy = y - y0;
    const int x1 = std::min(x0 + 1, frame.width() - 1);
    const int y1 = std::min(y0 + 1, frame.height() - 1);
    const double top = (1.0 - fx) * frame.at(x0, y0) + fx * frame.at(x1, y0);
    const double bottom = (1.0 - fx) * frame.at(x0, y1) + fx * frame.at(x1, y1);
    return (1.0 - fy) * top + fy * bottom;
}

Crop crop(const Frame& frame, const Rect& rect) {
    const int x0 = std::max(rect.x, 0);
    const int y0 = std::max(rect.y, 0);
    const int x1 = std::min(rect.x + rect.width, frame.width());
    const int y1 = std::min(rect.y + rect.height, frame.height());
    if (x1 <= x0 || y1 <= y0) throw InvalidArgument("crop rectangle does not intersect the frame");
    Frame out(x1 - x0, y1 - y0);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) out.at(x - x0, y - y0) = frame.at(x, y);
    }
    return {std::move(out), x0, y0};
}

}  // namespace vibtrack
