#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "planarflow/grid.hpp"
#include "planarflow/homography.hpp"
#include "planarflow/se3.hpp"

namespace planarflow::world {

// Planar scene: a textured fronto-parallel plane at depth z_ref. One texel
// spans z_ref/fx world units horizontally, so the identity camera sees the
// texture center at unit scale.
struct Scene {
    Grid texture;       // intensities in [0,1]
    double plane_depth = 5.0;
    std::uint64_t seed = 0;
};

using Video = Volume;  // frames with intensities in [0,1]

inline constexpr double kMinGradientEnergy = 1e-5;

bool has_texture(const Grid& frame);

// Band-limited value noise; octave amplitudes decay with `smoothness`, so the
// limit of large smoothness degenerates to a near-constant texture.
Scene generate_scene(std::uint64_t seed, double smoothness, int texture_width = 192,
                     int texture_height = 192, double z_ref = 5.0);

// Texture-space sampling position of one pixel ray, or nullopt when the ray
// meets the plane behind the camera. This is the map render() evaluates.
std::optional<Eigen::Vector2d> texture_position(const Scene& scene, const se3::Pose& pose,
                                                const homog::Intrinsics& K, double px,
                                                double py);

// Samples the scene texture through the plane-ray intersection for `pose`
// (world-to-camera), bilinear, 0 outside the texture.
Grid render(const Scene& scene, const se3::Pose& pose, const homog::Intrinsics& K, int width,
            int height);

Video render_video(const Scene& scene, const se3::Trajectory& trajectory,
                   const homog::Intrinsics& K, int width, int height);

struct TrajectoryEstimate {
    se3::Trajectory trajectory;
    std::vector<double> residuals;      // per-transition block matching RMS
    std::vector<bool> high_residual;    // transitions whose flow fit is suspect
};

// Residual threshold above which a transition is flagged; calibrated on clean
// rendered videos (their residuals stay well under 0.05).
inline constexpr double kResidualFlagThreshold = 0.12;

// Coarse-to-fine block matching (8x8 blocks, +-4 search per level, 3 pyramid
// levels, parabolic sub-pixel refinement), homography fit, plane-aware
// decomposition, accumulated into an identity-anchored trajectory.
TrajectoryEstimate estimate_trajectory(const Video& video, const homog::Intrinsics& K,
                                       double z_ref);

struct Rerendered {
    Video video;
    std::vector<std::vector<std::uint8_t>> interior;  // per-frame row-major mask
    Grid canonical;                                   // frame-0 view composite
    std::vector<std::uint8_t> canonical_coverage;
};

// Warps every frame into the frame-0 view along e_hat, median-composites a
// canonical texture, then renders that texture back along e_hat. Borders the
// camera never observed are masked out of `interior`.
Rerendered rerender_from_estimate(const Video& video, const se3::Trajectory& e_hat,
                                  const homog::Intrinsics& K, double z_ref);

// Renders the canonical composite of `rr` from an arbitrary pose (used for
// meta-view evaluation).
Grid render_canonical(const Rerendered& rr, const se3::Pose& pose, const homog::Intrinsics& K,
                      double z_ref, int width, int height);

} // namespace planarflow::world
