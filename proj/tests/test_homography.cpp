#include <doctest.h>

#include <cmath>

#include "planarflow/error.hpp"
#include "planarflow/homography.hpp"
#include "planarflow/rng.hpp"

using namespace planarflow;
using namespace planarflow::homog;

namespace {

const Intrinsics kK(64.0, 64.0, 31.5, 31.5);
constexpr double kZRef = 5.0;

se3::Pose small_motion_pose(Rng& rng) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = rng.uniform(-1.0, 1.0) * (10.0 * M_PI / 180.0);
    se3::Pose p;
    p.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    p.translation = 0.2 * kZRef *
                    Eigen::Vector3d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                    rng.uniform(-1.0, 1.0));
    return p;
}

} // namespace

TEST_CASE("identity motion gives identity homography") {
    const Homography h = homography_from_relative(kK, se3::Pose::identity(), kZRef);
    CHECK(h.h.isApprox(Eigen::Matrix3d::Identity(), 1e-14));
}

TEST_CASE("pure x translation: symbolic expansion") {
    // K (I + t n^T / z) K^{-1} with n = e_z adds fx*t_x/z_ref in (0,2).
    se3::Pose rel;
    rel.translation = Eigen::Vector3d(0.25, 0.0, 0.0);
    const Homography h = homography_from_relative(kK, rel, kZRef);
    Eigen::Matrix3d expect = Eigen::Matrix3d::Identity();
    expect(0, 2) = kK.fx * 0.25 / kZRef;
    CHECK(h.h.isApprox(expect, 1e-12));
}

TEST_CASE("pure rotation: translation term vanishes") {
    se3::Pose rel;
    rel.rotation = Eigen::AngleAxisd(0.05, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Homography h = homography_from_relative(kK, rel, kZRef);
    const Eigen::Matrix3d expect = kK.matrix() * rel.rotation * kK.inverse_matrix();
    CHECK(h.h.isApprox(expect / expect(2, 2), 1e-12));
}

TEST_CASE("invalid depth is rejected") {
    CHECK_THROWS_AS(homography_from_relative(kK, se3::Pose::identity(), 0.0), Error);
    CHECK_THROWS_AS(homography_from_relative(kK, se3::Pose::identity(), -1.0), Error);
}

TEST_CASE("identity homography gives zero flow") {
    const FlowField f = flow_from_homography(Homography{}, 16, 16);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        CHECK(f.u[i] == 0.0);
        CHECK(f.v[i] == 0.0);
    }
}

TEST_CASE("pixel-shift homography gives uniform flow") {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = 3.0;
    const FlowField f = flow_from_homography(Homography::from_matrix(m), 8, 8);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        CHECK(f.u[i] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(f.v[i] == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("flow self-consistency: H(u) equals u + f(u)") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Homography h = homography_from_relative(kK, small_motion_pose(rng), kZRef);
        const FlowField f = flow_from_homography(h, 32, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                if (!f.valid(x, y)) continue;
                const Eigen::Vector2d mapped = h.apply(Eigen::Vector2d(x, y));
                const std::size_t i = f.index(x, y);
                CHECK(std::abs(mapped.x() - (x + f.u[i])) < 1e-10);
                CHECK(std::abs(mapped.y() - (y + f.v[i])) < 1e-10);
            }
    }
}

TEST_CASE("scale invariance: H and lambda*H give identical flow") {
    Rng rng(77);
    const Eigen::Matrix3d m =
        homography_from_relative(kK, small_motion_pose(rng), kZRef).h;
    const FlowField a = flow_from_homography(Homography::from_matrix(m), 16, 16);
    const FlowField b = flow_from_homography(Homography::from_matrix(2.5 * m), 16, 16);
    const FlowField c = flow_from_homography(Homography::from_matrix(-0.7 * m), 16, 16);
    for (std::size_t i = 0; i < a.u.size(); ++i) {
        CHECK(a.u[i] == doctest::Approx(b.u[i]).epsilon(1e-12));
        CHECK(a.v[i] == doctest::Approx(b.v[i]).epsilon(1e-12));
        CHECK(a.u[i] == doctest::Approx(c.u[i]).epsilon(1e-12));
        CHECK(a.v[i] == doctest::Approx(c.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("flow composition law") {
    // f_{21}(u) = f1(u) + f2(u + f1(u)), with f2 evaluated projectively.
    Rng rng(13);
    const Homography h1 = homography_from_relative(kK, small_motion_pose(rng), kZRef);
    const Homography h2 = homography_from_relative(kK, small_motion_pose(rng), kZRef);
    const Homography h21 = Homography::from_matrix(h2.h * h1.h);
    const FlowField f1 = flow_from_homography(h1, 24, 24);
    const FlowField f21 = flow_from_homography(h21, 24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            if (!f1.valid(x, y) || !f21.valid(x, y)) continue;
            const std::size_t i = f1.index(x, y);
            const Eigen::Vector2d mid(x + f1.u[i], y + f1.v[i]);
            const Eigen::Vector2d end = h2.apply(mid);
            CHECK(std::abs(end.x() - x - f21.u[i]) < 1e-8);
            CHECK(std::abs(end.y() - y - f21.v[i]) < 1e-8);
        }
}

TEST_CASE("zero flow fits the identity homography") {
    const FlowField f(16, 16);
    const HomographyFit fit = fit_homography(f);
    CHECK(fit.homography.h.isApprox(Eigen::Matrix3d::Identity(), 1e-10));
    CHECK(fit.residual_rms < 1e-10);
}

TEST_CASE("noiseless roundtrip recovers the homography") {
    Rng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const Homography truth = homography_from_relative(kK, small_motion_pose(rng), kZRef);
        const FlowField flow = flow_from_homography(truth, 64, 64);
        const HomographyFit fit = fit_homography(flow);
        CHECK((fit.homography.h - truth.h).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("noisy roundtrip stays within 1e-2") {
    // Monte-Carlo oracle, seed fixed: i.i.d. pixel noise sigma = 0.1 on the
    // flow of a known moderate motion.
    se3::Pose pose;
    pose.rotation = Eigen::AngleAxisd(5.0 * M_PI / 180.0, Eigen::Vector3d::UnitY())
                        .toRotationMatrix();
    pose.translation = Eigen::Vector3d(0.2, 0.1, -0.15);
    const Homography truth = homography_from_relative(kK, pose, kZRef);
    for (int seed = 0; seed < 5; ++seed) {
        Rng rng(555 + seed);
        FlowField flow = flow_from_homography(truth, 64, 64);
        for (std::size_t i = 0; i < flow.u.size(); ++i) {
            if (flow.u[i] == FlowField::kInvalidFlow) continue;
            flow.u[i] += 0.1 * rng.normal();
            flow.v[i] += 0.1 * rng.normal();
        }
        const HomographyFit fit = fit_homography(flow);
        CHECK((fit.homography.h - truth.h).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("too few valid pixels is an error") {
    FlowField f(2, 2);
    f.invalidate(0, 0);
    CHECK_THROWS_AS(fit_homography(f), Error);
}

TEST_CASE("collinear correspondences are degenerate") {
    std::vector<Eigen::Vector2d> src, dst;
    for (int i = 0; i < 8; ++i) {
        src.emplace_back(static_cast<double>(i), 2.0 * i);  // one line
        dst.emplace_back(i + 1.0, 2.0 * i + 1.0);
    }
    CHECK_THROWS_AS(fit_homography(src, dst), Error);
}

TEST_CASE("identity homography decomposes to the identity pose") {
    const se3::Pose p = decompose_homography(Homography{}, kK, kZRef);
    CHECK(p.approx_equal(se3::Pose::identity(), 1e-12));
}

TEST_CASE("pure translation homography decomposes symbolically") {
    se3::Pose rel;
    rel.translation = Eigen::Vector3d(0.25, 0.0, 0.0);
    const Homography h = homography_from_relative(kK, rel, kZRef);
    const se3::Pose back = decompose_homography(h, kK, kZRef);
    CHECK(back.rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
    CHECK((back.translation - rel.translation).norm() < 1e-12);
}

TEST_CASE("construct-decompose roundtrip over random small motions") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const se3::Pose truth = small_motion_pose(rng);
        const Homography h = homography_from_relative(kK, truth, kZRef);
        const se3::Pose back = decompose_homography(h, kK, kZRef);
        const double rot_err =
            std::acos(std::clamp(((truth.rotation.transpose() * back.rotation).trace() - 1.0) / 2.0,
                                 -1.0, 1.0));
        CHECK(rot_err < 1e-6);
        CHECK((truth.translation - back.translation).norm() < 1e-6 * kZRef);
        // The recovered pose reproduces the homography.
        const Homography h2 = homography_from_relative(kK, back, kZRef);
        CHECK((h.h - h2.h).cwiseAbs().maxCoeff() < 1e-9);
    }
}
