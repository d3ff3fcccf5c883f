#include "vibtrack/flow.hpp"

#include <algorithm>
#include <cmath>

#include "vibtrack/error.hpp"
#include "vibtrack/features.hpp"

namespace vibtrack::flow {
namespace {

constexpr double level_blur_sigma = 1.0;
constexpr int min_level_side = 8;

Frame central_gradient(const Frame& img, bool along_x) {
    const int w = img.width();
    const int h = img.height();
    Frame g(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (along_x) {
                const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, w - 1);
                g.at(x, y) = x1 > x0 ? (img.at(x1, y) - img.at(x0, y)) / (x1 - x0) : 0.0;
            } else {
                const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, h - 1);
                g.at(x, y) = y1 > y0 ? (img.at(x, y1) - img.at(x, y0)) / (y1 - y0) : 0.0;
            }
        }
    }
    return g;
}

bool window_inside(const Frame& img, double x, double y, int r) {
    return x - r >= 0.0 && y - r >= 0.0 && x + r <= img.width() - 1 && y + r <= img.height() - 1;
}

TrackedPoint track_one(const LKPyramid& a, const LKPyramid& b, Point p, const LKConfig& cfg) {
    const int r = cfg.window_radius;
    const std::size_t area = static_cast<std::size_t>((2 * r + 1) * (2 * r + 1));
    const int levels = static_cast<int>(a.images.size());
    std::vector<double> ta(area), tx(area), ty(area);
    double gx = 0.0, gy = 0.0;  // guess propagated from coarser levels
    for (int l = levels - 1; l >= 0; --l) {
        const double scale = std::ldexp(1.0, -l);
        const double px = p.x * scale;
        const double py = p.y * scale;
        const Frame& ia = a.images[static_cast<std::size_t>(l)];
        const Frame& ib = b.images[static_cast<std::size_t>(l)];
        if (!window_inside(ia, px, py, r)) {
            if (l == 0) return {p, PointStatus::lost_bounds};
            gx *= 2.0;
            gy *= 2.0;
            continue;
        }
        double gxx = 0.0, gxy = 0.0, gyy = 0.0;
        std::size_t k = 0;
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx, ++k) {
                ta[k] = bilinear_sample(ia, px + dx, py + dy);
                tx[k] = bilinear_sample(a.grad_x[static_cast<std::size_t>(l)], px + dx, py + dy);
                ty[k] = bilinear_sample(a.grad_y[static_cast<std::size_t>(l)], px + dx, py + dy);
                gxx += tx[k] * tx[k];
                gxy += tx[k] * ty[k];
                gyy += ty[k] * ty[k];
            }
        }
        const double det = gxx * gyy - gxy * gxy;
        const double half_trace = 0.5 * (gxx + gyy);
        const double min_eig = half_trace - std::sqrt(std::max(0.0, half_trace * half_trace - det));
        const bool conditioned = min_eig >= cfg.min_eigenvalue * static_cast<double>(area);
        if (!conditioned) {
            if (l == 0) return {p, PointStatus::lost_conditioning};
            gx *= 2.0;
            gy *= 2.0;
            continue;
        }
        double vx = 0.0, vy = 0.0;
        bool converged = false;
        for (int it = 0; it < cfg.max_iterations; ++it) {
            const double qx = px + gx + vx;
            const double qy = py + gy + vy;
            if (!window_inside(ib, qx, qy, r)) return {p, PointStatus::lost_bounds};
            double bx = 0.0, by = 0.0;
            k = 0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx, ++k) {
                    const double diff = ta[k] - bilinear_sample(ib, qx + dx, qy + dy);
                    bx += diff * tx[k];
                    by += diff * ty[k];
                }
            }
            const double nx = (gyy * bx - gxy * by) / det;
            const double ny = (gxx * by - gxy * bx) / det;
            vx += nx;
            vy += ny;
            if (std::hypot(nx, ny) < cfg.epsilon) {
                converged = true;
                break;
            }
        }
        if (l == 0) {
            if (!converged) return {p, PointStatus::lost_convergence};
            const Point out{p.x + gx + vx, p.y + gy + vy};
            if (!window_inside(ib, out.x, out.y, r)) return {out, PointStatus::lost_bounds};
            return {out, PointStatus::valid};
        }
        gx = 2.0 * (gx + vx);
        gy = 2.0 * (gy + vy);
    }
    return {p, PointStatus::lost_bounds};
}

}  // namespace

void LKConfig::validate() const {
    if (window_radius < 1 || pyramid_levels < 1 || max_iterations < 1 || !(epsilon > 0.0) || !(min_eigenvalue > 0.0)) {
        throw InvalidArgument("LK configuration values must all be positive");
    }
}

LKPyramid build_lk_pyramid(const Frame& frame, int levels) {
    LKPyramid pyr;
    Frame level = features::gaussian_blur(frame, level_blur_sigma);
    for (int l = 0; l < levels; ++l) {
        if (l > 0) {
            if (std::min(level.width(), level.height()) / 2 < min_level_side) break;
            level = features::gaussian_blur(features::downsample(level), level_blur_sigma);
        }
        pyr.grad_x.push_back(central_gradient(level, true));
        pyr.grad_y.push_back(central_gradient(level, false));
        pyr.images.push_back(level);
    }
    return pyr;
}

std::vector<TrackedPoint> track_points_lk(const LKPyramid& a, const LKPyramid& b, const std::vector<Point>& points,
                                          const LKConfig& config) {
    config.validate();
    if (a.images.empty() || b.images.empty() || a.images.size() != b.images.size() ||
        a.images[0].width() != b.images[0].width() || a.images[0].height() != b.images[0].height()) {
        throw InvalidArgument("LK frames must have identical sizes");
    }
    std::vector<TrackedPoint> out;
    out.reserve(points.size());
    for (const Point& p : points) out.push_back(track_one(a, b, p, config));
    return out;
}

std::vector<TrackedPoint> track_points_lk(const Frame& frame_a, const Frame& frame_b, const std::vector<Point>& points,
                                          const LKConfig& config) {
    config.validate();
    if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height()) {
        throw InvalidArgument("LK frames must have identical sizes");
    }
    if (points.empty()) return {};
    return track_points_lk(build_lk_pyramid(frame_a, config.pyramid_levels),
                           build_lk_pyramid(frame_b, config.pyramid_levels), points, config);
}

MeasurementSeries accumulate_displacement(const std::vector<Step>& steps, double fps) {
    MeasurementSeries series;
    series.fps = fps;
    series.samples.reserve(steps.size() + 1);
    double du = 0.0, dv = 0.0;
    series.samples.push_back({0.0, 0.0, 0.0, 0, false});
    for (std::size_t j = 0; j < steps.size(); ++j) {
        du += steps[j].du;
        dv += steps[j].dv;
        series.samples.push_back({static_cast<double>(j + 1) / fps, du, dv, 0, false});
    }
    return series;
}

MeasurementSeries track_sequence_lk(const FrameSequence& frames, const std::vector<Point>& seeds,
                                    const LKConfig& config) {
    config.validate();
    if (frames.size() < 2) throw InvalidArgument("LK tracking needs at least two frames");
    if (seeds.empty()) throw InvalidArgument("LK tracking needs at least one seed point");

    std::vector<Point> points = seeds;
    std::vector<Step> steps;
    std::vector<int> counts{static_cast<int>(points.size())};
    LKPyramid prev = build_lk_pyramid(frames[0], config.pyramid_levels);
    for (std::size_t j = 1; j < frames.size(); ++j) {
        LKPyramid next = build_lk_pyramid(frames[j], config.pyramid_levels);
        const auto tracked = track_points_lk(prev, next, points, config);
        std::vector<Point> survivors;
        double su = 0.0, sv = 0.0;
        for (std::size_t i = 0; i < tracked.size(); ++i) {
            if (tracked[i].status != PointStatus::valid) continue;
            su += tracked[i].position.x - points[i].x;
            sv += tracked[i].position.y - points[i].y;
            survivors.push_back(tracked[i].position);
        }
        if (survivors.empty()) throw TrackingError("all LK points lost", j);
        const double n = static_cast<double>(survivors.size());
        steps.push_back({su / n, sv / n});
        counts.push_back(static_cast<int>(survivors.size()));
        points = std::move(survivors);
        prev = std::move(next);
    }
    MeasurementSeries series = accumulate_displacement(steps, frames.fps());
    for (std::size_t j = 0; j < series.samples.size(); ++j) series.samples[j].quality = counts[j];
    return series;
}

}  // namespace vibtrack::flow
