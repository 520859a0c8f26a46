#include "planarflow/se3.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "planarflow/error.hpp"

namespace planarflow::se3 {

double Pose::orthonormality_defect() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    const double ortho = (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    const double det = std::abs(rotation.determinant() - 1.0);
    return std::max(ortho, det);
}

Pose Pose::orthonormalized() const {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Eigen::Matrix3d u = svd.matrixU();
        u.col(2) *= -1.0;
        r = u * svd.matrixV().transpose();
    }
    return {r, translation};
}

bool Pose::approx_equal(const Pose& other, double tol) const {
    return (rotation - other.rotation).cwiseAbs().maxCoeff() <= tol &&
           (translation - other.translation).cwiseAbs().maxCoeff() <= tol;
}

const std::vector<MotionKind>& all_motion_kinds() {
    static const std::vector<MotionKind> kinds = {
        MotionKind::push_in,    MotionKind::pull_out,  MotionKind::move_left,
        MotionKind::move_right, MotionKind::orbit_left, MotionKind::orbit_right,
        MotionKind::pan_left,   MotionKind::pan_right, MotionKind::pull_left,
        MotionKind::pull_right, MotionKind::fixed,
    };
    return kinds;
}

std::string_view motion_kind_name(MotionKind kind) {
    switch (kind) {
        case MotionKind::push_in: return "push_in";
        case MotionKind::pull_out: return "pull_out";
        case MotionKind::move_left: return "move_left";
        case MotionKind::move_right: return "move_right";
        case MotionKind::orbit_left: return "orbit_left";
        case MotionKind::orbit_right: return "orbit_right";
        case MotionKind::pan_left: return "pan_left";
        case MotionKind::pan_right: return "pan_right";
        case MotionKind::pull_left: return "pull_left";
        case MotionKind::pull_right: return "pull_right";
        case MotionKind::fixed: return "fixed";
    }
    return "unknown";
}

bool motion_kind_from_name(std::string_view name, MotionKind& out) {
    for (MotionKind k : all_motion_kinds()) {
        if (name == motion_kind_name(k)) {
            out = k;
            return true;
        }
    }
    return false;
}

bool is_composite(MotionKind kind) {
    return kind == MotionKind::pull_left || kind == MotionKind::pull_right;
}

MotionDefaults MotionDefaults::for_depth(double z_ref) {
    MotionDefaults d;
    d.z_ref = z_ref;
    d.translation_step = 0.02 * z_ref;
    return d;
}

MotionToken MotionDefaults::token(MotionKind kind) const {
    switch (kind) {
        case MotionKind::push_in:
        case MotionKind::pull_out:
        case MotionKind::move_left:
        case MotionKind::move_right:
            return {kind, translation_step};
        case MotionKind::pan_left:
        case MotionKind::pan_right:
        case MotionKind::orbit_left:
        case MotionKind::orbit_right:
        case MotionKind::pull_left:
        case MotionKind::pull_right:
            return {kind, rotation_step};
        case MotionKind::fixed:
            return {kind, 0.0};
    }
    raise(ErrorKind::invalid_argument, "unknown motion kind");
}

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<MotionToken> expand(const MotionToken& token, const MotionDefaults& defaults) {
    if (token.kind == MotionKind::pull_left) {
        return {defaults.token(MotionKind::move_left), defaults.token(MotionKind::pull_out),
                {MotionKind::pan_left, token.magnitude}};
    }
    if (token.kind == MotionKind::pull_right) {
        return {defaults.token(MotionKind::move_right), defaults.token(MotionKind::pull_out),
                {MotionKind::pan_right, token.magnitude}};
    }
    return {token};
}

// Yaw about the camera y axis (x right, y down, z forward). Positive angle
// turns the optical axis left, so on-axis content shifts toward +x.
Eigen::Matrix3d yaw(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix3d r;
    r << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
    return r;
}

} // namespace

std::vector<MotionToken> detect_motion_tokens(std::string_view prompt,
                                              const MotionDefaults& defaults) {
    if (prompt.empty())
        raise(ErrorKind::invalid_argument, "detect_motion_tokens: empty prompt");

    std::string text = to_lower(prompt);
    std::replace(text.begin(), text.end(), '_', ' ');

    struct Match {
        std::size_t pos;
        std::size_t len;
        MotionKind kind;
    };
    std::vector<Match> matches;
    for (MotionKind kind : all_motion_kinds()) {
        std::string phrase(motion_kind_name(kind));
        std::replace(phrase.begin(), phrase.end(), '_', ' ');
        std::size_t pos = 0;
        while ((pos = text.find(phrase, pos)) != std::string::npos) {
            matches.push_back({pos, phrase.size(), kind});
            pos += 1;
        }
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.len > b.len;  // longest match first on ties
    });

    std::vector<MotionToken> tokens;
    std::size_t consumed_until = 0;
    for (const Match& m : matches) {
        if (m.pos < consumed_until) continue;  // overlapped by a longer earlier match
        consumed_until = m.pos + m.len;
        for (const MotionToken& t : expand(defaults.token(m.kind), defaults))
            tokens.push_back(t);
    }
    if (tokens.empty()) tokens.push_back(defaults.token(MotionKind::fixed));
    return tokens;
}

Pose action_transform(const MotionToken& token, int step, double z_ref) {
    if (step < 1)
        raise(ErrorKind::invalid_argument, "action_transform: step must be >= 1");
    if (is_composite(token.kind))
        raise(ErrorKind::invalid_argument,
              "action_transform: composite token must be expanded before use");
    if (token.kind != MotionKind::fixed && !(token.magnitude > 0.0))
        raise(ErrorKind::invalid_argument, "action_transform: magnitude must be positive");

    const double m = token.magnitude;
    Pose p;
    switch (token.kind) {
        case MotionKind::fixed:
            return p;
        case MotionKind::push_in:
            // Camera advances along +z; world points lose depth.
            p.translation = Eigen::Vector3d(0.0, 0.0, -m);
            return p;
        case MotionKind::pull_out:
            p.translation = Eigen::Vector3d(0.0, 0.0, m);
            return p;
        case MotionKind::move_left:
            // Camera trucks toward -x; content shifts toward +x.
            p.translation = Eigen::Vector3d(m, 0.0, 0.0);
            return p;
        case MotionKind::move_right:
            p.translation = Eigen::Vector3d(-m, 0.0, 0.0);
            return p;
        case MotionKind::pan_left:
            p.rotation = yaw(m);
            return p;
        case MotionKind::pan_right:
            p.rotation = yaw(-m);
            return p;
        case MotionKind::orbit_left:
        case MotionKind::orbit_right: {
            // Rotation about the focal point f = (0,0,z_ref): f is a fixed
            // point of the transform, t = (I - R) f.
            const double angle = (token.kind == MotionKind::orbit_left) ? m : -m;
            const Eigen::Vector3d focal(0.0, 0.0, z_ref);
            p.rotation = yaw(angle);
            p.translation = focal - p.rotation * focal;
            return p;
        }
        case MotionKind::pull_left:
        case MotionKind::pull_right:
            break;
    }
    raise(ErrorKind::invalid_argument, "action_transform: unknown token kind");
}

Trajectory synthesize_trajectory(const std::vector<MotionToken>& tokens, int frame_count,
                                 double z_ref) {
    if (tokens.empty())
        raise(ErrorKind::invalid_argument, "synthesize_trajectory: no tokens");
    if (frame_count < 1)
        raise(ErrorKind::insufficient_data, "synthesize_trajectory: frame_count must be >= 1");

    const MotionDefaults defaults = MotionDefaults::for_depth(z_ref);
    std::vector<MotionToken> flat;
    for (const MotionToken& t : tokens)
        for (const MotionToken& e : expand(t, defaults)) flat.push_back(e);

    const int segments = static_cast<int>(flat.size());
    if (frame_count < segments)
        raise(ErrorKind::insufficient_data,
              "synthesize_trajectory: fewer frames than motion tokens");

    const int share = frame_count / segments;
    Trajectory traj;
    traj.poses.reserve(static_cast<std::size_t>(frame_count) + 1);
    traj.poses.push_back(Pose::identity());

    constexpr double kDriftTolerance = 1e-9;
    int frame = 0;
    for (int s = 0; s < segments; ++s) {
        const int seg_frames = (s == segments - 1) ? frame_count - frame : share;
        for (int i = 1; i <= seg_frames; ++i) {
            // The action is an incremental camera-frame transform, so it
            // composes on the left of a world-to-camera extrinsic and
            // E_{t+1} E_t^{-1} recovers it exactly.
            const Pose step = action_transform(flat[s], i, z_ref);
            Pose next = step.compose(traj.poses.back());
            if (next.orthonormality_defect() > kDriftTolerance) next = next.orthonormalized();
            traj.poses.push_back(next);
        }
        frame += seg_frames;
    }
    return traj;
}

Pose relative_pose(const Pose& a, const Pose& b) {
    return b.compose(a.inverse());
}

} // namespace planarflow::se3
