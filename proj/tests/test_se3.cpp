#include <doctest.h>

#include <cmath>

#include "planarflow/error.hpp"
#include "planarflow/rng.hpp"
#include "planarflow/se3.hpp"

using namespace planarflow;
using namespace planarflow::se3;

namespace {

Pose random_pose(int seed) {
    // Small random rotation via axis-angle plus a translation.
    Rng rng(static_cast<std::uint64_t>(seed), 0xabc);
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = 0.3 * rng.uniform();
    const Eigen::AngleAxisd aa(angle, axis);
    Pose p;
    p.rotation = aa.toRotationMatrix();
    p.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    return p;
}

} // namespace

TEST_CASE("keyword detection finds tokens in order") {
    const auto tokens = detect_motion_tokens("Camera push in. A lion roaring in the wind.");
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].kind == MotionKind::push_in);
    CHECK(tokens[0].magnitude > 0.0);
}

TEST_CASE("no keyword yields a single fixed token") {
    const auto tokens = detect_motion_tokens("A turquoise lagoon surrounded by palm trees.");
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].kind == MotionKind::fixed);
    CHECK(tokens[0].magnitude == 0.0);
}

TEST_CASE("multiple keywords in order of appearance") {
    const auto tokens = detect_motion_tokens("Camera move left, pull out, then pan right.");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0].kind == MotionKind::move_left);
    CHECK(tokens[1].kind == MotionKind::pull_out);
    CHECK(tokens[2].kind == MotionKind::pan_right);
}

TEST_CASE("composite tokens expand to their sequences") {
    const auto tokens = detect_motion_tokens("Camera pull left across the bay.");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0].kind == MotionKind::move_left);
    CHECK(tokens[1].kind == MotionKind::pull_out);
    CHECK(tokens[2].kind == MotionKind::pan_left);
}

TEST_CASE("underscore and case variants are accepted") {
    const auto tokens = detect_motion_tokens("camera ORBIT_RIGHT around the vase");
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].kind == MotionKind::orbit_right);
}

TEST_CASE("empty prompt is rejected") {
    CHECK_THROWS_AS(detect_motion_tokens(""), Error);
}

TEST_CASE("fixed action is the identity") {
    const Pose p = action_transform({MotionKind::fixed, 0.0}, 3, 5.0);
    CHECK(p.approx_equal(Pose::identity(), 0.0));
}

TEST_CASE("pan is rotation-only yaw") {
    const double theta = 0.1;
    const Pose p = action_transform({MotionKind::pan_left, theta}, 1, 5.0);
    CHECK(p.translation.norm() == 0.0);
    CHECK(std::abs(p.rotation(0, 0) - std::cos(theta)) < 1e-15);
    CHECK(std::abs(p.rotation(0, 2) - std::sin(theta)) < 1e-15);
    CHECK(p.rotation(1, 1) == 1.0);
}

TEST_CASE("orbit keeps the focal point fixed") {
    // Derived check: the constructed transform must map (0,0,d) to itself.
    const double d = 5.0;
    for (const MotionKind kind : {MotionKind::orbit_left, MotionKind::orbit_right}) {
        const Pose p = action_transform({kind, 0.2}, 1, d);
        const Eigen::Vector3d focal(0.0, 0.0, d);
        CHECK((p.apply(focal) - focal).norm() < 1e-9);
        CHECK(p.translation.norm() > 0.0);  // combined rotation + translation
        CHECK(p.orthonormality_defect() < 1e-9);
    }
}

TEST_CASE("composite kinds must be expanded before action_transform") {
    CHECK_THROWS_AS(action_transform({MotionKind::pull_left, 0.1}, 1, 5.0), Error);
}

TEST_CASE("fixed trajectory is all identities") {
    const Trajectory t = synthesize_trajectory({{MotionKind::fixed, 0.0}}, 10, 5.0);
    REQUIRE(t.poses.size() == 11);
    CHECK(t.frame_count() == 10);
    for (const Pose& p : t.poses) CHECK(p.approx_equal(Pose::identity(), 0.0));
}

TEST_CASE("push_in accumulates translation along the optical axis") {
    // Derived: product of commuting translations is t * delta on the z axis.
    const double delta = 0.05;
    const Trajectory t = synthesize_trajectory({{MotionKind::push_in, delta}}, 5, 5.0);
    REQUIRE(t.poses.size() == 6);
    for (int i = 0; i <= 5; ++i) {
        CHECK(t.poses[i].rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-15));
        CHECK(std::abs(std::abs(t.poses[i].translation.z()) - i * delta) < 1e-12);
        CHECK(t.poses[i].translation.head<2>().norm() == 0.0);
    }
}

TEST_CASE("two-token trajectory: segment-wise composition matches direct products") {
    const MotionToken move{MotionKind::move_left, 0.1};
    const MotionToken pan{MotionKind::pan_left, 0.05};
    const Trajectory t = synthesize_trajectory({move, pan}, 8, 5.0);
    REQUIRE(t.poses.size() == 9);

    // Direct oracle: frames 1-4 translate, frames 5-8 rotate locally.
    Pose expect = Pose::identity();
    for (int i = 1; i <= 4; ++i) {
        expect = action_transform(move, i, 5.0).compose(expect);
        CHECK(t.poses[i].approx_equal(expect, 1e-12));
    }
    for (int i = 5; i <= 8; ++i) {
        expect = action_transform(pan, i, 5.0).compose(expect);
        CHECK(t.poses[i].approx_equal(expect, 1e-12));
    }
    // Frames 1-4 are translation-only.
    CHECK(t.poses[4].rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    // Frames 5-8 rotate about the pose reached at frame 4: the relative pose
    // from frame 4 onward is rotation-only.
    for (int i = 5; i <= 8; ++i) {
        const Pose rel = relative_pose(t.poses[4], t.poses[i]);
        CHECK(std::abs(rel.rotation(0, 0) - std::cos(0.05 * (i - 4))) < 1e-12);
    }
}

TEST_CASE("remainder frames go to the last token") {
    const Trajectory t = synthesize_trajectory(
        {{MotionKind::move_left, 0.1}, {MotionKind::pan_left, 0.05}}, 7, 5.0);
    // 7 frames, 2 segments: 3 + 4.
    CHECK(t.poses[3].rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    CHECK_FALSE(t.poses[4].rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST_CASE("insufficient frames for the token list") {
    CHECK_THROWS_AS(synthesize_trajectory({{MotionKind::move_left, 0.1},
                                           {MotionKind::pan_left, 0.05},
                                           {MotionKind::push_in, 0.1}},
                                          2, 5.0),
                    Error);
}

TEST_CASE("trajectory synthesis is deterministic") {
    const std::vector<MotionToken> tokens = {{MotionKind::orbit_left, 0.02}};
    const Trajectory a = synthesize_trajectory(tokens, 49, 5.0);
    const Trajectory b = synthesize_trajectory(tokens, 49, 5.0);
    REQUIRE(a.poses.size() == b.poses.size());
    for (std::size_t i = 0; i < a.poses.size(); ++i) {
        CHECK(a.poses[i].rotation == b.poses[i].rotation);
        CHECK(a.poses[i].translation == b.poses[i].translation);
    }
}

TEST_CASE("orthonormality holds over 1000 steps") {
    const Trajectory t =
        synthesize_trajectory({{MotionKind::orbit_right, 0.01}}, 1000, 5.0);
    for (const Pose& p : t.poses) CHECK(p.orthonormality_defect() < 1e-7);
}

TEST_CASE("relative_pose is the group quotient") {
    CHECK(relative_pose(Pose::identity(), Pose::identity())
              .approx_equal(Pose::identity(), 0.0));
    for (int seed = 0; seed < 20; ++seed) {
        const Pose e = random_pose(seed);
        CHECK(relative_pose(e, e).approx_equal(Pose::identity(), 1e-12));
        const Pose f = random_pose(seed + 1000);
        // Derived: rel(a,b) * a = b.
        const Pose rel = relative_pose(e, f);
        CHECK(rel.compose(e).approx_equal(f, 1e-12));
    }
}

TEST_CASE("fixed trajectories induce zero relative motion") {
    const Trajectory t = synthesize_trajectory({{MotionKind::fixed, 0.0}}, 12, 5.0);
    for (std::size_t i = 0; i + 1 < t.poses.size(); ++i)
        CHECK(relative_pose(t.poses[i], t.poses[i + 1])
                  .approx_equal(Pose::identity(), 1e-15));
}
