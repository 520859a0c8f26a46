#pragma once

#include <cstdint>
#include <vector>

#include "planarflow/grid.hpp"
#include "planarflow/se3.hpp"

namespace planarflow::metrics {

struct CameraErrors {
    double rot_err = 0.0;    // mean geodesic rotation distance, degrees
    double trans_err = 0.0;  // mean translation L2, normalized by target path length
    double cam_mc = 0.0;     // mean Frobenius distance of normalized 3x4 poses
};

// arccos((tr(Ra^T Rb) - 1) / 2), radians.
double geodesic_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

// Total length of the per-step translation increments; the normalizer for
// scale-free translation errors (floor-guarded against static trajectories).
double path_length(const se3::Trajectory& t);

CameraErrors camera_errors(const se3::Trajectory& target, const se3::Trajectory& estimated);

inline constexpr double kPsnrCap = 99.0;

// 10*log10(1/MSE) over masked pixels, averaged over frames; identical inputs
// report the 99 dB cap. Masks may be empty (all pixels).
double psnr(const Volume& a, const Volume& b,
            const std::vector<std::vector<std::uint8_t>>& mask = {});

// Windowed mean/variance/covariance similarity (8x8 windows, stride 4) with
// the standard stabilizers; symmetric, 1 for identical inputs.
double local_similarity(const Volume& a, const Volume& b);

} // namespace planarflow::metrics
