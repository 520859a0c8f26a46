#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "planarflow/se3.hpp"

namespace planarflow::homog {

struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    Intrinsics() = default;
    Intrinsics(double fx_, double fy_, double cx_, double cy_);

    // Centered pinhole with focal length equal to the image width.
    static Intrinsics centered(int width, int height);

    Eigen::Matrix3d matrix() const;
    Eigen::Matrix3d inverse_matrix() const;
};

// Projective 3x3 map, normalized so h(2,2) == 1 on construction.
struct Homography {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();

    static Homography from_matrix(const Eigen::Matrix3d& m);

    // Projective application to a pixel; w_out receives the depth component
    // before division.
    Eigen::Vector2d apply(const Eigen::Vector2d& u, double* w_out = nullptr) const;
};

// Per-pixel forward displacements in pixels. Pixels whose projective depth
// collapses are stored as kInvalidFlow in both planes and skipped downstream.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;  // row-major horizontal displacement
    std::vector<double> v;  // row-major vertical displacement

    static constexpr double kInvalidFlow = std::numeric_limits<float>::max();

    FlowField() = default;
    FlowField(int w, int h, double du = 0.0, double dv = 0.0);

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    bool valid(int x, int y) const { return u[index(x, y)] != kInvalidFlow; }
    void invalidate(int x, int y) {
        u[index(x, y)] = kInvalidFlow;
        v[index(x, y)] = kInvalidFlow;
    }
};

// H = K (R + t n^T / z_ref) K^{-1}, the pixel map induced by the relative
// motion `rel` and a plane with unit normal n at depth z_ref.
Homography homography_from_relative(const Intrinsics& K, const se3::Pose& rel, double z_ref,
                                    const Eigen::Vector3d& normal = Eigen::Vector3d(0, 0, 1));

FlowField flow_from_homography(const Homography& H, int width, int height);

struct HomographyFit {
    Homography homography;
    double residual_rms = 0.0;
};

// Hartley-normalized DLT least squares over the (u, u + f(u)) correspondences
// of all valid pixels.
HomographyFit fit_homography(const FlowField& flow);
HomographyFit fit_homography(const std::vector<Eigen::Vector2d>& src,
                             const std::vector<Eigen::Vector2d>& dst);

// Inverts homography_from_relative under the fixed fronto-parallel plane
// n = (0,0,1) at known z_ref.
se3::Pose decompose_homography(const Homography& H, const Intrinsics& K, double z_ref);

} // namespace planarflow::homog
