#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "vibtrack/image.hpp"

namespace vibtrack::features {

struct ScaleSpaceConfig {
    int n_octaves = 4;
    int scales_per_octave = 3;
    double base_sigma = 1.6;
    double contrast_threshold = 0.03;
    double edge_ratio_threshold = 10.0;

    void validate() const;
};

struct Keypoint {
    double x = 0.0;  ///< original-image coordinates
    double y = 0.0;
    int octave = 0;
    int level = 0;           ///< DoG level index within the octave (1..S)
    double level_offset = 0.0;  ///< refined sub-level offset in [-0.5, 0.5]
    double scale = 0.0;      ///< sigma in original-image pixels
    double orientation = 0.0;  ///< radians in [0, 2*pi)
    double response = 0.0;   ///< interpolated DoG value
};

using Descriptor = std::array<double, 128>;

struct Match {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double distance = 0.0;
    double du = 0.0;  ///< x_b - x_a
    double dv = 0.0;  ///< y_b - y_a
};

/// Gaussian and difference-of-Gaussian levels, one vector of images per octave.
/// gaussians[o] holds S+3 images, dogs[o] holds S+2.
struct Pyramid {
    ScaleSpaceConfig config;
    std::vector<std::vector<Frame>> gaussians;
    std::vector<std::vector<Frame>> dogs;

    int octaves() const noexcept { return static_cast<int>(gaussians.size()); }
    /// Absolute sigma (in octave pixels) of Gaussian level s.
    double level_sigma(int s) const;
};

/// Separable Gaussian blur, kernel radius ceil(3 sigma), edge replication.
Frame gaussian_blur(const Frame& frame, double sigma);

/// Halves resolution by taking every second pixel.
Frame downsample(const Frame& frame);

/// Largest octave count keeping the coarsest octave's short side >= 16 px.
int max_octaves(int width, int height);

Pyramid build_dog_pyramid(const Frame& frame, const ScaleSpaceConfig& config);

std::vector<Keypoint> detect_keypoints(const Pyramid& pyramid);

/// Descriptors for the keypoints whose sampling window fits the image; returns
/// the surviving keypoints paired with their descriptors.
std::pair<std::vector<Keypoint>, std::vector<Descriptor>> compute_descriptors(const Pyramid& pyramid,
                                                                              const std::vector<Keypoint>& keypoints);

struct FeatureSet {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;
};

/// Full pyramid + detection + description pass; octave count is clipped to
/// what the image size allows.
FeatureSet extract_features(const Frame& frame, const ScaleSpaceConfig& config);

double descriptor_distance(const Descriptor& a, const Descriptor& b);

/// Ratio-test matching with mutual-best cross check.
std::vector<Match> match_descriptors(const std::vector<Keypoint>& keypoints_a, const std::vector<Descriptor>& a,
                                     const std::vector<Keypoint>& keypoints_b, const std::vector<Descriptor>& b,
                                     double ratio);

/// Mutual-best matching gated by an absolute descriptor distance, for when the
/// second set is too small for the ratio test.
std::vector<Match> match_descriptors_absolute(const std::vector<Keypoint>& keypoints_a,
                                              const std::vector<Descriptor>& a,
                                              const std::vector<Keypoint>& keypoints_b,
                                              const std::vector<Descriptor>& b, double max_distance);

/// Rigid-motion consensus: keeps matches whose displacement lies within
/// `radius` (per component) of the median displacement, then the top_k by
/// descriptor distance. Repeats until the kept set is consistent with its own
/// median. Throws ConsensusError when nothing survives.
std::vector<Match> filter_matches_by_motion(const std::vector<Match>& matches, double radius, std::size_t top_k);

struct Displacement {
    double du = 0.0;
    double dv = 0.0;
};

Displacement average_displacement(const std::vector<Match>& matches);

/// Component-wise median (mean of the middle pair for even counts).
Displacement median_displacement(const std::vector<Match>& matches);

void write_keypoints_csv(std::ostream& out, const std::vector<Keypoint>& keypoints);
void write_matches_csv(std::ostream& out, const std::vector<Match>& matches);

}  // namespace vibtrack::features
