#include <doctest.h>

#include <cmath>

#include "planarflow/error.hpp"
#include "planarflow/metrics.hpp"
#include "planarflow/rng.hpp"
#include "planarflow/world.hpp"

using namespace planarflow;
using namespace planarflow::world;

namespace {

constexpr double kZRef = 5.0;

se3::Trajectory small_trajectory(se3::MotionKind kind, double magnitude, int frames) {
    return se3::synthesize_trajectory({{kind, magnitude}}, frames, kZRef);
}

double ncc(const Grid& a, const Grid& b) {
    const double ma = grid_mean(a), mb = grid_mean(b);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        num += (a.v[i] - ma) * (b.v[i] - mb);
        da += (a.v[i] - ma) * (a.v[i] - ma);
        db += (b.v[i] - mb) * (b.v[i] - mb);
    }
    return num / std::sqrt(da * db);
}

} // namespace

TEST_CASE("scene generation is deterministic per seed") {
    const Scene a = generate_scene(7, 0.8);
    const Scene b = generate_scene(7, 0.8);
    CHECK(a.texture.v == b.texture.v);
}

TEST_CASE("huge smoothness degenerates to a near-constant texture") {
    const Scene s = generate_scene(3, 50.0);
    CHECK_FALSE(has_texture(s.texture));
    CHECK(has_texture(generate_scene(3, 0.8).texture));
}

TEST_CASE("different seeds decorrelate") {
    for (int seed = 0; seed < 5; ++seed) {
        const Scene a = generate_scene(seed, 0.8);
        const Scene b = generate_scene(seed + 100, 0.8);
        CHECK(std::abs(ncc(a.texture, b.texture)) < 0.2);
    }
}

TEST_CASE("texture values stay in [0,1]") {
    const Scene s = generate_scene(11, 0.3);
    for (double v : s.texture.v) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("identity pose renders the texture center crop at unit scale") {
    const Scene s = generate_scene(1, 0.8, 192, 192, kZRef);
    const homog::Intrinsics K = homog::Intrinsics::centered(128, 128);
    const Grid frame = render(s, se3::Pose::identity(), K, 128, 128);
    const int off = (192 - 128) / 2;
    for (int y = 0; y < 128; y += 7)
        for (int x = 0; x < 128; x += 7)
            CHECK(frame.at(x, y) ==
                  doctest::Approx(s.texture.at(x + off, y + off)).epsilon(1e-12));
}

TEST_CASE("integer move_right shifts content left exactly") {
    const Scene s = generate_scene(2, 0.8, 192, 192, kZRef);
    const homog::Intrinsics K = homog::Intrinsics::centered(128, 128);
    // Magnitude chosen so the pixel shift is exactly 4.
    const double m = 4.0 * kZRef / K.fx;
    const se3::Pose pose = se3::action_transform({se3::MotionKind::move_right, m}, 1, kZRef);
    const Grid f0 = render(s, se3::Pose::identity(), K, 128, 128);
    const Grid f1 = render(s, pose, K, 128, 128);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x + 4 < 128; ++x)
            CHECK(f1.at(x, y) == doctest::Approx(f0.at(x + 4, y)).epsilon(1e-12));
}

TEST_CASE("warp consistency: rendering commutes with the induced homography") {
    const Scene s = generate_scene(5, 0.8, 192, 192, kZRef);
    const homog::Intrinsics K = homog::Intrinsics::centered(96, 96);
    const se3::Pose e = se3::action_transform({se3::MotionKind::move_left, 0.08}, 1, kZRef);
    const se3::Pose pan = se3::action_transform({se3::MotionKind::pan_left, 0.03}, 1, kZRef);
    const se3::Pose e2 = pan.compose(e);

    // Route A: direct ray-plane sampling of view e2. Route B: map the pixel
    // into view e through the relative homography, then sample. Both must
    // land on the same texture position.
    const homog::Homography h =
        homog::homography_from_relative(K, se3::relative_pose(e2, e), kZRef);
    int checked = 0;
    for (int y = 0; y < 96; y += 3) {
        for (int x = 0; x < 96; x += 3) {
            const auto direct = texture_position(s, e2, K, x, y);
            REQUIRE(direct.has_value());
            const Eigen::Vector2d q = h.apply(Eigen::Vector2d(x, y));
            const auto via_e = texture_position(s, e, K, q.x(), q.y());
            REQUIRE(via_e.has_value());
            CHECK((*direct - *via_e).norm() < 1e-9);
            ++checked;
        }
    }
    CHECK(checked >= 1024);
}

TEST_CASE("camera behind plane raises") {
    const Scene s = generate_scene(1, 0.8);
    const homog::Intrinsics K = homog::Intrinsics::centered(32, 32);
    se3::Pose flipped;
    flipped.rotation = Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX()).toRotationMatrix();
    CHECK_THROWS_AS(render(s, flipped, K, 32, 32), Error);
}

TEST_CASE("render-estimate roundtrip recovers small motions") {
    const homog::Intrinsics K = homog::Intrinsics::centered(128, 128);
    const struct {
        se3::MotionKind kind;
        double magnitude;
    } cases[] = {
        {se3::MotionKind::move_left, 0.01 * kZRef},
        {se3::MotionKind::pan_left, 0.3 * M_PI / 180.0},
        {se3::MotionKind::push_in, 0.01 * kZRef},
    };
    int scene_seed = 40;
    for (const auto& c : cases) {
        const Scene s = generate_scene(scene_seed++, 0.8, 224, 224, kZRef);
        const se3::Trajectory target = small_trajectory(c.kind, c.magnitude, 8);
        const Video video = render_video(s, target, K, 128, 128);
        const TrajectoryEstimate est = estimate_trajectory(video, K, kZRef);
        REQUIRE(est.trajectory.poses.size() == target.poses.size());
        for (std::size_t i = 0; i < target.poses.size(); ++i) {
            const double rot_deg =
                metrics::geodesic_distance(target.poses[i].rotation,
                                           est.trajectory.poses[i].rotation) *
                180.0 / M_PI;
            CHECK(rot_deg < 0.1);
            CHECK((target.poses[i].translation - est.trajectory.poses[i].translation).norm() <
                  0.01 * kZRef);
        }
        for (bool flag : est.high_residual) CHECK_FALSE(flag);
    }
}

TEST_CASE("static video estimates the identity trajectory") {
    const Scene s = generate_scene(9, 0.8);
    const homog::Intrinsics K = homog::Intrinsics::centered(64, 64);
    const Grid frame = render(s, se3::Pose::identity(), K, 64, 64);
    Video video;
    for (int i = 0; i < 5; ++i) video.frames.push_back(frame);
    const TrajectoryEstimate est = estimate_trajectory(video, K, kZRef);
    for (const se3::Pose& p : est.trajectory.poses)
        CHECK(p.approx_equal(se3::Pose::identity(), 1e-9));
}

TEST_CASE("textureless video is untrackable") {
    Video video(3, 64, 64, 0.5);
    CHECK_THROWS_AS(estimate_trajectory(video, homog::Intrinsics::centered(64, 64), kZRef),
                    Error);
}

TEST_CASE("a noise frame flags its transitions") {
    const Scene s = generate_scene(21, 0.8, 224, 224, kZRef);
    const homog::Intrinsics K = homog::Intrinsics::centered(64, 64);
    const se3::Trajectory target = small_trajectory(se3::MotionKind::move_left, 0.05, 6);
    Video video = render_video(s, target, K, 64, 64);
    Rng rng(3);
    for (double& v : video.frames[3].v) v = rng.uniform();
    const TrajectoryEstimate est = estimate_trajectory(video, K, kZRef);
    CHECK(est.high_residual[2]);  // frame 2 -> 3
    CHECK(est.high_residual[3]);  // frame 3 -> 4
    CHECK_FALSE(est.high_residual[0]);
}

TEST_CASE("self-reconstruction with the true trajectory exceeds 40 dB") {
    const homog::Intrinsics K = homog::Intrinsics::centered(96, 96);
    const Scene s = generate_scene(31, 0.8, 224, 224, kZRef);
    const se3::Trajectory target = small_trajectory(se3::MotionKind::move_left, 0.04, 6);
    const Video video = render_video(s, target, K, 96, 96);
    const Rerendered rr = rerender_from_estimate(video, target, K, kZRef);
    CHECK(metrics::psnr(video, rr.video, rr.interior) > 40.0);
}

TEST_CASE("morphing world reconstructs badly") {
    const homog::Intrinsics K = homog::Intrinsics::centered(96, 96);
    const se3::Trajectory target = small_trajectory(se3::MotionKind::move_left, 0.04, 6);
    Video video;
    for (std::size_t t = 0; t < target.poses.size(); ++t) {
        const Scene s = generate_scene(500 + t, 0.8, 224, 224, kZRef);
        video.frames.push_back(render(s, target.poses[t], K, 96, 96));
    }
    const Rerendered rr = rerender_from_estimate(video, target, K, kZRef);
    CHECK(metrics::psnr(video, rr.video, rr.interior) < 15.0);
}

TEST_CASE("single-frame video rerenders exactly") {
    const Scene s = generate_scene(77, 0.8);
    const homog::Intrinsics K = homog::Intrinsics::centered(64, 64);
    Video video;
    video.frames.push_back(render(s, se3::Pose::identity(), K, 64, 64));
    se3::Trajectory traj;
    traj.poses.push_back(se3::Pose::identity());
    const Rerendered rr = rerender_from_estimate(video, traj, K, kZRef);
    CHECK(rr.video.frames[0].v == video.frames[0].v);
    CHECK(metrics::psnr(video, rr.video) == metrics::kPsnrCap);
}

TEST_CASE("closed loop: estimate then rerender clears 35 dB over 20 scenes") {
    const homog::Intrinsics K = homog::Intrinsics::centered(96, 96);
    const se3::MotionKind kinds[] = {se3::MotionKind::move_left, se3::MotionKind::pan_right,
                                     se3::MotionKind::push_in, se3::MotionKind::orbit_left};
    for (int i = 0; i < 20; ++i) {
        const Scene s = generate_scene(1000 + i, 0.8, 224, 224, kZRef);
        const se3::MotionKind kind = kinds[i % 4];
        const double mag =
            (kind == se3::MotionKind::pan_right || kind == se3::MotionKind::orbit_left)
                ? 0.004
                : 0.03;
        const se3::Trajectory target = small_trajectory(kind, mag, 6);
        const Video video = render_video(s, target, K, 96, 96);
        const TrajectoryEstimate est = estimate_trajectory(video, K, kZRef);
        const Rerendered rr = rerender_from_estimate(video, est.trajectory, K, kZRef);
        CHECK(metrics::psnr(video, rr.video, rr.interior) > 35.0);
    }
}

TEST_CASE("reconstruction degrades monotonically under warp jitter") {
    const homog::Intrinsics K = homog::Intrinsics::centered(96, 96);
    const se3::Trajectory target = small_trajectory(se3::MotionKind::move_left, 0.04, 6);
    double previous = 1e9;
    for (const double jitter : {0.02, 0.08, 0.3}) {
        double mean_psnr = 0.0;
        for (int seed = 0; seed < 3; ++seed) {
            const Scene s = generate_scene(2000 + seed, 0.8, 224, 224, kZRef);
            Rng rng(static_cast<std::uint64_t>(seed * 17 + jitter * 1000));
            Video video;
            for (std::size_t t = 0; t < target.poses.size(); ++t) {
                se3::Pose p = target.poses[t];
                p.translation += jitter * Eigen::Vector3d(rng.normal(), rng.normal(), 0.0);
                video.frames.push_back(render(s, p, K, 96, 96));
            }
            const Rerendered rr = rerender_from_estimate(video, target, K, kZRef);
            mean_psnr += metrics::psnr(video, rr.video, rr.interior);
        }
        mean_psnr /= 3.0;
        CHECK(mean_psnr < previous);
        previous = mean_psnr;
    }
}
