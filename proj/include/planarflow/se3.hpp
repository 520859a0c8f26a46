#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace planarflow::se3 {

// Rigid transform. Poses are world-to-camera: E maps world coordinates into
// the camera frame, so E_b * E_a^{-1} is directly the camera-a to camera-b
// point transform used by the homography projection.
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Pose identity() { return {}; }

    Pose compose(const Pose& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    Pose inverse() const {
        const Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    // Max deviation from R^T R = I and det = +1.
    double orthonormality_defect() const;

    // Project the rotation block back onto SO(3); translation untouched.
    Pose orthonormalized() const;

    bool approx_equal(const Pose& other, double tol) const;
};

enum class MotionKind {
    push_in,
    pull_out,
    move_left,
    move_right,
    orbit_left,
    orbit_right,
    pan_left,
    pan_right,
    pull_left,   // composite: move_left -> pull_out -> pan_left
    pull_right,  // composite: move_right -> pull_out -> pan_right
    fixed,
};

inline constexpr int kMotionKindCount = 11;

const std::vector<MotionKind>& all_motion_kinds();
std::string_view motion_kind_name(MotionKind kind);
bool motion_kind_from_name(std::string_view name, MotionKind& out);
bool is_composite(MotionKind kind);

// Per-step displacement (world units) or angle (radians). magnitude is zero
// exactly for `fixed` and positive otherwise.
struct MotionToken {
    MotionKind kind = MotionKind::fixed;
    double magnitude = 0.0;
};

// Default per-step magnitudes: 0.02*z_ref translation, 1.5 deg rotation.
// A 49-frame clip then stays within roughly a quarter of the field of view.
struct MotionDefaults {
    double z_ref = 5.0;
    double translation_step = 0.1;                      // 0.02 * z_ref
    double rotation_step = 1.5 * 3.14159265358979323846 / 180.0;

    static MotionDefaults for_depth(double z_ref);
    MotionToken token(MotionKind kind) const;
};

struct Trajectory {
    std::vector<Pose> poses;  // poses[0] is identity; length frame_count + 1

    int frame_count() const { return static_cast<int>(poses.size()) - 1; }
};

// Scans the prompt for canonical motion phrases (case-insensitive, space and
// underscore variants, longest match wins on overlap) and returns tokens in
// order of appearance. Composites expand to their three-step sequences. A
// prompt with no keyword yields a single `fixed` token.
std::vector<MotionToken> detect_motion_tokens(std::string_view prompt,
                                              const MotionDefaults& defaults = {});

// Incremental camera-to-camera transform for one step of `token`. The orbit
// focal point sits at (0,0,z_ref) on the optical axis. Composite kinds must
// be expanded before calling; step is 1-based.
Pose action_transform(const MotionToken& token, int step, double z_ref);

// E_0 = I, E_t = E_{t-1} * T_action. Multiple tokens split the N frames into
// contiguous equal shares (remainder on the last token) and the segments are
// chained so the path is continuous. Composite tokens are expanded first.
Trajectory synthesize_trajectory(const std::vector<MotionToken>& tokens, int frame_count,
                                 double z_ref);

// b * a^{-1}: the camera-a to camera-b transform.
Pose relative_pose(const Pose& a, const Pose& b);

} // namespace planarflow::se3
