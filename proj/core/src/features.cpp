#include "vibtrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <tuple>

#include "vibtrack/error.hpp"
#include "vibtrack/series.hpp"

namespace vibtrack::features {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr int min_octave_side = 16;
constexpr int max_refine_steps = 5;
constexpr int border = 1;

// Orientation assignment.
constexpr int ori_bins = 36;
constexpr double ori_sigma_factor = 1.5;
constexpr double ori_peak_ratio = 0.8;

// Descriptor layout: 4x4 cells of 8 orientation bins; a cell spans 4 samples at
// the base scale and grows with the keypoint scale.
constexpr int desc_width = 4;
constexpr int desc_bins = 8;
constexpr double desc_cell_samples = 4.0;
constexpr double desc_clamp = 0.2;

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

double normalize_angle(double a) {
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a -= two_pi;
    return a;
}

struct Gradient {
    double magnitude;
    double angle;
};

inline Gradient gradient_at(const Frame& img, int x, int y) {
    const double dx = img.at(x + 1, y) - img.at(x - 1, y);
    const double dy = img.at(x, y + 1) - img.at(x, y - 1);
    return {std::sqrt(dx * dx + dy * dy), normalize_angle(std::atan2(dy, dx))};
}

bool solve3(const double h[3][3], const double g[3], double out[3]) {
    const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                       h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                       h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    if (std::abs(det) < 1e-15) return false;
    double m[3][3];
    for (int c = 0; c < 3; ++c) {
        for (int r = 0; r < 3; ++r) {
            for (int k = 0; k < 3; ++k) m[r][k] = k == c ? g[r] : h[r][k];
        }
        out[c] = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                  m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
                 det;
    }
    return true;
}

bool is_extremum(const std::vector<Frame>& dogs, int s, int x, int y) {
    const double v = dogs[static_cast<std::size_t>(s)].at(x, y);
    const bool maximum = v > 0.0;
    for (int ds = -1; ds <= 1; ++ds) {
        const Frame& img = dogs[static_cast<std::size_t>(s + ds)];
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (ds == 0 && dx == 0 && dy == 0) continue;
                const double n = img.at(x + dx, y + dy);
                if (maximum ? n >= v : n <= v) return false;
            }
        }
    }
    return true;
}

// Fits a 3-D quadratic around (x, y, s), moving to the neighbouring sample up
// to max_refine_steps times. Returns false when the fit leaves the image or
// does not settle within half a sample.
bool refine(const Pyramid& pyr, int o, int& s, int& x, int& y, double offset[3], double& value) {
    const auto& dogs = pyr.dogs[static_cast<std::size_t>(o)];
    const int levels = pyr.config.scales_per_octave;
    const int w = dogs[0].width();
    const int h = dogs[0].height();
    for (int step = 0; step < max_refine_steps; ++step) {
        const Frame& prev = dogs[static_cast<std::size_t>(s - 1)];
        const Frame& cur = dogs[static_cast<std::size_t>(s)];
        const Frame& next = dogs[static_cast<std::size_t>(s + 1)];
        const double c = cur.at(x, y);
        const double g[3] = {0.5 * (cur.at(x + 1, y) - cur.at(x - 1, y)), 0.5 * (cur.at(x, y + 1) - cur.at(x, y - 1)),
                             0.5 * (next.at(x, y) - prev.at(x, y))};
        const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - 2.0 * c;
        const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - 2.0 * c;
        const double dss = next.at(x, y) + prev.at(x, y) - 2.0 * c;
        const double dxy = 0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
        const double dxs = 0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) + prev.at(x - 1, y));
        const double dys = 0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) + prev.at(x, y - 1));
        const double hess[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
        const double neg_g[3] = {-g[0], -g[1], -g[2]};
        if (!solve3(hess, neg_g, offset)) return false;
        if (std::abs(offset[0]) <= 0.5 && std::abs(offset[1]) <= 0.5 && std::abs(offset[2]) <= 0.5) {
            value = c + 0.5 * (g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2]);
            return true;
        }
        x += static_cast<int>(std::lround(offset[0]));
        y += static_cast<int>(std::lround(offset[1]));
        s += static_cast<int>(std::lround(offset[2]));
        if (s < 1 || s > levels || x < border || x >= w - border || y < border || y >= h - border) return false;
    }
    return false;
}

bool passes_edge_test(const Frame& dog, int x, int y, double edge_ratio) {
    const double c = dog.at(x, y);
    const double dxx = dog.at(x + 1, y) + dog.at(x - 1, y) - 2.0 * c;
    const double dyy = dog.at(x, y + 1) + dog.at(x, y - 1) - 2.0 * c;
    const double dxy = 0.25 * (dog.at(x + 1, y + 1) - dog.at(x - 1, y + 1) - dog.at(x + 1, y - 1) + dog.at(x - 1, y - 1));
    const double tr = dxx + dyy;
    const double det = dxx * dyy - dxy * dxy;
    if (det <= 0.0) return false;
    return tr * tr * edge_ratio < (edge_ratio + 1.0) * (edge_ratio + 1.0) * det;
}

// Dominant gradient orientations around a keypoint (octave coordinates).
std::vector<double> orientations(const Frame& img, double cx, double cy, double sigma_oct) {
    const double sigma = ori_sigma_factor * sigma_oct;
    const int radius = static_cast<int>(std::lround(3.0 * sigma));
    const int ix = static_cast<int>(std::lround(cx));
    const int iy = static_cast<int>(std::lround(cy));
    std::array<double, ori_bins> hist{};
    for (int dy = -radius; dy <= radius; ++dy) {
        const int y = iy + dy;
        if (y < 1 || y >= img.height() - 1) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            const int x = ix + dx;
            if (x < 1 || x >= img.width() - 1) continue;
            const Gradient g = gradient_at(img, x, y);
            const double weight = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            int bin = static_cast<int>(std::lround(g.angle / two_pi * ori_bins));
            if (bin >= ori_bins) bin -= ori_bins;
            hist[static_cast<std::size_t>(bin)] += weight * g.magnitude;
        }
    }
    // Circular [1 4 6 4 1] smoothing.
    std::array<double, ori_bins> smooth{};
    for (int i = 0; i < ori_bins; ++i) {
        auto at = [&](int k) { return hist[static_cast<std::size_t>((k + ori_bins) % ori_bins)]; };
        smooth[static_cast<std::size_t>(i)] =
            (at(i - 2) + at(i + 2)) * (1.0 / 16.0) + (at(i - 1) + at(i + 1)) * (4.0 / 16.0) + at(i) * (6.0 / 16.0);
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    std::vector<double> out;
    if (!(peak > 0.0)) return out;
    for (int i = 0; i < ori_bins; ++i) {
        const double l = smooth[static_cast<std::size_t>((i + ori_bins - 1) % ori_bins)];
        const double r = smooth[static_cast<std::size_t>((i + 1) % ori_bins)];
        const double v = smooth[static_cast<std::size_t>(i)];
        if (v > l && v >= r && v >= ori_peak_ratio * peak) {
            const double shift = 0.5 * (l - r) / (l - 2.0 * v + r);
            out.push_back(normalize_angle((i + shift) * two_pi / ori_bins));
        }
    }
    return out;
}

double keypoint_sigma_in_octave(const Pyramid& pyr, const Keypoint& kp) {
    return pyr.config.base_sigma * std::pow(2.0, (kp.level + kp.level_offset) / pyr.config.scales_per_octave);
}

int descriptor_radius(double sigma_oct, double base_sigma) {
    const double cell = desc_cell_samples * sigma_oct / base_sigma;
    return static_cast<int>(std::ceil(cell * std::numbers::sqrt2 * (desc_width + 1) * 0.5));
}

Descriptor describe(const Frame& img, double cx, double cy, double sigma_oct, double base_sigma, double orientation) {
    const double cell = desc_cell_samples * sigma_oct / base_sigma;
    const int radius = descriptor_radius(sigma_oct, base_sigma);
    const double cos_t = std::cos(orientation);
    const double sin_t = std::sin(orientation);
    const double weight_sigma = 0.5 * desc_width;
    const int ix = static_cast<int>(std::lround(cx));
    const int iy = static_cast<int>(std::lround(cy));
    const double fx = cx - ix;
    const double fy = cy - iy;

    std::array<double, (desc_width + 2) * (desc_width + 2) * (desc_bins + 2)> hist{};
    auto index = [](int r, int c, int o) {
        return static_cast<std::size_t>((r * (desc_width + 2) + c) * (desc_bins + 2) + o);
    };
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            // Sample position relative to the keypoint, rotated into its frame
            // and expressed in cell units.
            const double rx = dx - fx;
            const double ry = dy - fy;
            const double col = (cos_t * rx + sin_t * ry) / cell;
            const double row = (-sin_t * rx + cos_t * ry) / cell;
            const double rbin = row + desc_width / 2.0 - 0.5;
            const double cbin = col + desc_width / 2.0 - 0.5;
            if (rbin <= -1.0 || rbin >= desc_width || cbin <= -1.0 || cbin >= desc_width) continue;
            const Gradient g = gradient_at(img, ix + dx, iy + dy);
            double obin = normalize_angle(g.angle - orientation) / two_pi * desc_bins;
            const double weight = std::exp(-(row * row + col * col) / (2.0 * weight_sigma * weight_sigma));
            const double mag = g.magnitude * weight;

            const int r0 = static_cast<int>(std::floor(rbin));
            const int c0 = static_cast<int>(std::floor(cbin));
            int o0 = static_cast<int>(std::floor(obin));
            const double dr = rbin - r0;
            const double dc = cbin - c0;
            const double dob = obin - o0;
            if (o0 >= desc_bins) o0 -= desc_bins;
            for (int i = 0; i < 2; ++i) {
                const double wr = i == 0 ? 1.0 - dr : dr;
                for (int j = 0; j < 2; ++j) {
                    const double wc = j == 0 ? 1.0 - dc : dc;
                    for (int k = 0; k < 2; ++k) {
                        const double wo = k == 0 ? 1.0 - dob : dob;
                        hist[index(r0 + 1 + i, c0 + 1 + j, o0 + k)] += mag * wr * wc * wo;
                    }
                }
            }
        }
    }
    Descriptor d{};
    for (int r = 0; r < desc_width; ++r) {
        for (int c = 0; c < desc_width; ++c) {
            for (int o = 0; o < desc_bins; ++o) {
                double v = hist[index(r + 1, c + 1, o)];
                if (o == 0) v += hist[index(r + 1, c + 1, desc_bins)];
                d[static_cast<std::size_t>((r * desc_width + c) * desc_bins + o)] = v;
            }
        }
    }
    auto normalize = [&d] {
        double norm = 0.0;
        for (double v : d) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (double& v : d) v /= norm;
        }
    };
    normalize();
    for (double& v : d) v = std::min(v, desc_clamp);
    normalize();
    return d;
}

}  // namespace

void ScaleSpaceConfig::validate() const {
    if (n_octaves < 1) throw InvalidArgument("n_octaves must be >= 1");
    if (scales_per_octave < 3) throw InvalidArgument("scales_per_octave must be >= 3");
    if (!(base_sigma > 0.0 && contrast_threshold > 0.0 && edge_ratio_threshold > 0.0)) {
        throw InvalidArgument("scale-space thresholds must be positive");
    }
}

double Pyramid::level_sigma(int s) const {
    return config.base_sigma * std::pow(2.0, static_cast<double>(s) / config.scales_per_octave);
}

Frame gaussian_blur(const Frame& frame, double sigma) {
    if (sigma < 0.0) throw InvalidArgument("blur sigma must be non-negative");
    if (sigma == 0.0) return frame;
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = frame.width();
    const int h = frame.height();
    Frame tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * frame.at(xx, y);
            }
            tmp.at(x, y) = acc;
        }
    }
    Frame out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(x, yy);
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

Frame downsample(const Frame& frame) {
    const int w = std::max(1, frame.width() / 2);
    const int h = std::max(1, frame.height() / 2);
    Frame out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(x, y) = frame.at(2 * x, 2 * y);
    }
    return out;
}

int max_octaves(int width, int height) {
    int side = std::min(width, height);
    int octaves = 0;
    while (side >= min_octave_side) {
        ++octaves;
        side /= 2;
    }
    return octaves;
}

Pyramid build_dog_pyramid(const Frame& frame, const ScaleSpaceConfig& config) {
    config.validate();
    const int achievable = max_octaves(frame.width(), frame.height());
    if (config.n_octaves > achievable) {
        throw InvalidArgument("image " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                              " supports at most " + std::to_string(achievable) + " octave(s), " +
                              std::to_string(config.n_octaves) + " requested");
    }
    Pyramid pyr;
    pyr.config = config;
    const int levels = config.scales_per_octave + 3;
    for (int o = 0; o < config.n_octaves; ++o) {
        std::vector<Frame> gauss;
        gauss.reserve(static_cast<std::size_t>(levels));
        if (o == 0) {
            for (int s = 0; s < levels; ++s) gauss.push_back(gaussian_blur(frame, pyr.level_sigma(s)));
        } else {
            // Level S of the previous octave has twice the base blur; halved it
            // carries exactly base_sigma.
            Frame seed = downsample(pyr.gaussians.back()[static_cast<std::size_t>(config.scales_per_octave)]);
            const double base2 = config.base_sigma * config.base_sigma;
            gauss.push_back(seed);
            for (int s = 1; s < levels; ++s) {
                const double sig = pyr.level_sigma(s);
                gauss.push_back(gaussian_blur(seed, std::sqrt(sig * sig - base2)));
            }
        }
        std::vector<Frame> dogs;
        dogs.reserve(static_cast<std::size_t>(levels - 1));
        for (int s = 0; s + 1 < levels; ++s) {
            const Frame& a = gauss[static_cast<std::size_t>(s)];
            const Frame& b = gauss[static_cast<std::size_t>(s + 1)];
            Frame d(a.width(), a.height());
            for (std::size_t i = 0; i < d.pixels().size(); ++i) d.pixels()[i] = b.pixels()[i] - a.pixels()[i];
            dogs.push_back(std::move(d));
        }
        pyr.gaussians.push_back(std::move(gauss));
        pyr.dogs.push_back(std::move(dogs));
    }
    return pyr;
}

std::vector<Keypoint> detect_keypoints(const Pyramid& pyr) {
    const auto& cfg = pyr.config;
    const double prefilter = 0.5 * cfg.contrast_threshold;
    std::vector<Keypoint> out;
    for (int o = 0; o < pyr.octaves(); ++o) {
        const auto& dogs = pyr.dogs[static_cast<std::size_t>(o)];
        const int w = dogs[0].width();
        const int h = dogs[0].height();
        const double octave_scale = std::ldexp(1.0, o);
        for (int s0 = 1; s0 <= cfg.scales_per_octave; ++s0) {
            for (int y0 = border; y0 < h - border; ++y0) {
                for (int x0 = border; x0 < w - border; ++x0) {
                    if (std::abs(dogs[static_cast<std::size_t>(s0)].at(x0, y0)) < prefilter) continue;
                    if (!is_extremum(dogs, s0, x0, y0)) continue;
                    int s = s0, x = x0, y = y0;
                    double offset[3];
                    double value = 0.0;
                    if (!refine(pyr, o, s, x, y, offset, value)) continue;
                    if (std::abs(value) < cfg.contrast_threshold) continue;
                    if (!passes_edge_test(dogs[static_cast<std::size_t>(s)], x, y, cfg.edge_ratio_threshold)) continue;

                    Keypoint kp;
                    kp.octave = o;
                    kp.level = s;
                    kp.level_offset = offset[2];
                    kp.x = (x + offset[0]) * octave_scale;
                    kp.y = (y + offset[1]) * octave_scale;
                    kp.response = value;
                    const double sigma_oct = keypoint_sigma_in_octave(pyr, kp);
                    kp.scale = sigma_oct * octave_scale;
                    const Frame& gauss = pyr.gaussians[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)];
                    for (double angle : orientations(gauss, x + offset[0], y + offset[1], sigma_oct)) {
                        kp.orientation = angle;
                        out.push_back(kp);
                    }
                }
            }
        }
    }
    // A refinement step may land two seeds on one extremum; keep one.
    std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
        return std::tie(a.y, a.x, a.scale, a.orientation) < std::tie(b.y, b.x, b.scale, b.orientation);
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Keypoint& a, const Keypoint& b) {
                              return a.x == b.x && a.y == b.y && a.scale == b.scale && a.orientation == b.orientation;
                          }),
              out.end());
    return out;
}

std::pair<std::vector<Keypoint>, std::vector<Descriptor>> compute_descriptors(const Pyramid& pyr,
                                                                              const std::vector<Keypoint>& keypoints) {
    std::vector<Keypoint> kept;
    std::vector<Descriptor> descriptors;
    for (const Keypoint& kp : keypoints) {
        if (kp.octave < 0 || kp.octave >= pyr.octaves()) throw InvalidArgument("keypoint octave not in pyramid");
        const Frame& img = pyr.gaussians[static_cast<std::size_t>(kp.octave)][static_cast<std::size_t>(kp.level)];
        const double octave_scale = std::ldexp(1.0, kp.octave);
        const double cx = kp.x / octave_scale;
        const double cy = kp.y / octave_scale;
        const double sigma_oct = kp.scale / octave_scale;
        const int radius = descriptor_radius(sigma_oct, pyr.config.base_sigma);
        const int ix = static_cast<int>(std::lround(cx));
        const int iy = static_cast<int>(std::lround(cy));
        // Gradients need one more pixel beyond the window.
        if (ix - radius < 1 || iy - radius < 1 || ix + radius > img.width() - 2 || iy + radius > img.height() - 2) {
            continue;
        }
        kept.push_back(kp);
        descriptors.push_back(describe(img, cx, cy, sigma_oct, pyr.config.base_sigma, kp.orientation));
    }
    return {std::move(kept), std::move(descriptors)};
}

FeatureSet extract_features(const Frame& frame, const ScaleSpaceConfig& config) {
    ScaleSpaceConfig cfg = config;
    cfg.n_octaves = std::min(cfg.n_octaves, max_octaves(frame.width(), frame.height()));
    if (cfg.n_octaves < 1) return {};
    const Pyramid pyr = build_dog_pyramid(frame, cfg);
    auto [kps, descs] = compute_descriptors(pyr, detect_keypoints(pyr));
    return {std::move(kps), std::move(descs)};
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

struct Nearest {
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    double second_distance = std::numeric_limits<double>::infinity();
};

Nearest nearest(const Descriptor& query, const std::vector<Descriptor>& set) {
    Nearest n;
    for (std::size_t j = 0; j < set.size(); ++j) {
        const double d = descriptor_distance(query, set[j]);
        if (d < n.best_distance) {
            n.second_distance = n.best_distance;
            n.best_distance = d;
            n.best = j;
        } else if (d < n.second_distance) {
            n.second_distance = d;
        }
    }
    return n;
}

void check_pairing(const std::vector<Keypoint>& kps, const std::vector<Descriptor>& descs) {
    if (kps.size() != descs.size()) throw InvalidArgument("keypoint and descriptor lists differ in length");
}

template <typename Accept>
std::vector<Match> mutual_matches(const std::vector<Keypoint>& ka, const std::vector<Descriptor>& a,
                                  const std::vector<Keypoint>& kb, const std::vector<Descriptor>& b, Accept accept) {
    check_pairing(ka, a);
    check_pairing(kb, b);
    std::vector<Match> out;
    if (a.empty() || b.empty()) return out;
    std::vector<Nearest> reverse(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) reverse[j] = nearest(b[j], a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Nearest n = nearest(a[i], b);
        if (!accept(n)) continue;
        if (reverse[n.best].best != i) continue;
        out.push_back({i, n.best, n.best_distance, kb[n.best].x - ka[i].x, kb[n.best].y - ka[i].y});
    }
    return out;
}

}  // namespace

std::vector<Match> match_descriptors(const std::vector<Keypoint>& keypoints_a, const std::vector<Descriptor>& a,
                                     const std::vector<Keypoint>& keypoints_b, const std::vector<Descriptor>& b,
                                     double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("match ratio must be in (0, 1)");
    if (a.empty()) return {};
    if (b.size() < 2) {
        throw InvalidArgument("ratio test needs at least 2 candidate descriptors, got " + std::to_string(b.size()) +
                              "; use absolute-distance matching instead");
    }
    return mutual_matches(keypoints_a, a, keypoints_b, b,
                          [ratio](const Nearest& n) { return n.best_distance < ratio * n.second_distance; });
}

std::vector<Match> match_descriptors_absolute(const std::vector<Keypoint>& keypoints_a,
                                              const std::vector<Descriptor>& a,
                                              const std::vector<Keypoint>& keypoints_b,
                                              const std::vector<Descriptor>& b, double max_distance) {
    if (!(max_distance > 0.0)) throw InvalidArgument("absolute match distance must be positive");
    return mutual_matches(keypoints_a, a, keypoints_b, b,
                          [max_distance](const Nearest& n) { return n.best_distance <= max_distance; });
}

namespace {
double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

Displacement median_displacement(const std::vector<Match>& matches) {
    if (matches.empty()) throw InvalidArgument("median of an empty match list");
    std::vector<double> du, dv;
    for (const auto& m : matches) {
        du.push_back(m.du);
        dv.push_back(m.dv);
    }
    return {median_of(std::move(du)), median_of(std::move(dv))};
}

std::vector<Match> filter_matches_by_motion(const std::vector<Match>& matches, double radius, std::size_t top_k) {
    if (matches.empty()) throw InvalidArgument("motion filter needs at least one match");
    if (!(radius >= 0.0)) throw InvalidArgument("motion radius must be non-negative");
    if (top_k < 1) throw InvalidArgument("top_k must be >= 1");
    std::vector<Match> current = matches;
    for (;;) {
        const Displacement med = median_displacement(current);
        std::vector<Match> kept;
        for (const auto& m : current) {
            if (std::abs(m.du - med.du) <= radius && std::abs(m.dv - med.dv) <= radius) kept.push_back(m);
        }
        if (kept.empty()) throw ConsensusError("no match lies within the motion radius of the median displacement");
        std::stable_sort(kept.begin(), kept.end(), [](const Match& a, const Match& b) {
            return std::tie(a.distance, a.index_a, a.index_b) < std::tie(b.distance, b.index_a, b.index_b);
        });
        if (kept.size() > top_k) kept.resize(top_k);
        if (kept.size() == current.size()) return kept;
        current = std::move(kept);
    }
}

Displacement average_displacement(const std::vector<Match>& matches) {
    if (matches.empty()) throw InvalidArgument("average displacement of an empty match list");
    double du = 0.0, dv = 0.0;
    for (const auto& m : matches) {
        du += m.du;
        dv += m.dv;
    }
    const double n = static_cast<double>(matches.size());
    return {du / n, dv / n};
}

void write_keypoints_csv(std::ostream& out, const std::vector<Keypoint>& keypoints) {
    out << "x,y,scale,orientation\n";
    for (const auto& k : keypoints) {
        out << format_fixed(k.x) << ',' << format_fixed(k.y) << ',' << format_fixed(k.scale) << ','
            << format_fixed(k.orientation) << '\n';
    }
}

void write_matches_csv(std::ostream& out, const std::vector<Match>& matches) {
    out << "index_a,index_b,distance,du,dv\n";
    for (const auto& m : matches) {
        out << m.index_a << ',' << m.index_b << ',' << format_fixed(m.distance) << ',' << format_fixed(m.du) << ','
            << format_fixed(m.dv) << '\n';
    }
}

}  // namespace vibtrack::features
