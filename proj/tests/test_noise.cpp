#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "planarflow/error.hpp"
#include "planarflow/noise.hpp"

using namespace planarflow;
using namespace planarflow::noise;

namespace {

homog::FlowField uniform_flow(int w, int h, double du, double dv) {
    return homog::FlowField(w, h, du, dv);
}

} // namespace

TEST_CASE("zero flow gives the identity mapping with unit density") {
    const auto corr = discrete_correspondences(uniform_flow(8, 8, 0.0, 0.0));
    CHECK(corr.density.total() == 64);
    for (std::size_t t = 0; t < 64; ++t) {
        REQUIRE(corr.count(t) == 1);
        CHECK(corr.sources[corr.offsets[t]] == t);
    }
}

TEST_CASE("uniform +1 flow drops the rightmost column and starves the leftmost") {
    const int w = 8, h = 4;
    const auto corr = discrete_correspondences(uniform_flow(w, h, 1.0, 0.0));
    CHECK(corr.density.total() == static_cast<std::uint64_t>((w - 1) * h));
    for (int y = 0; y < h; ++y) {
        CHECK(corr.density.at(0, y) == 0);       // disocclusion column
        for (int x = 1; x < w; ++x) CHECK(corr.density.at(x, y) == 1);
    }
}

TEST_CASE("converging flow counts both arrivals") {
    homog::FlowField f(2, 1);
    f.u[f.index(1, 0)] = -1.0;  // (1,0) -> (0,0); (0,0) stays
    const auto corr = discrete_correspondences(f);
    CHECK(corr.density.at(0, 0) == 2);
    CHECK(corr.density.at(1, 0) == 0);
}

TEST_CASE("sentinel pixels are dropped from transport") {
    homog::FlowField f(4, 4);
    f.invalidate(2, 2);
    const auto corr = discrete_correspondences(f);
    CHECK(corr.density.total() == 15);
    CHECK(corr.density.at(2, 2) == 0);
}

TEST_CASE("rounding is half away from zero per axis") {
    homog::FlowField f(3, 1);
    f.u[f.index(0, 0)] = 0.5;   // 0 + 0.5 -> 1 (away from zero)
    f.u[f.index(1, 0)] = 0.49;  // stays at 1
    f.u[f.index(2, 0)] = -0.5;  // 2 - 0.5 -> 1.5 -> 2? lround(1.5) = 2
    const auto corr = discrete_correspondences(f);
    CHECK(corr.density.at(1, 0) == 2);
    CHECK(corr.density.at(2, 0) == 1);
}

TEST_CASE("identity transport reproduces the input exactly") {
    Rng rng(5);
    const NoiseGrid z = sample_noise_grid(16, 16, 3, rng);
    const auto corr = discrete_correspondences(uniform_flow(16, 16, 0.0, 0.0));
    const NoiseGrid out = transport(z, corr, Rng(5, 1).stream_key());
    CHECK(out.values == z.values);
}

TEST_CASE("two merging unit sources produce (z1 + z2) / sqrt(2)") {
    NoiseGrid z(2, 1, 1);
    z.at(0, 0, 0) = 0.7;
    z.at(1, 0, 0) = -1.3;
    homog::FlowField f(2, 1);
    f.u[f.index(1, 0)] = -1.0;
    const auto corr = discrete_correspondences(f);
    const NoiseGrid out = transport(z, corr, 12345);
    CHECK(out.at(0, 0, 0) == doctest::Approx((0.7 - 1.3) / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("disoccluded pixels draw fresh standard normals") {
    // Monte-Carlo statistics over a region nothing flows into.
    const int w = 64, h = 64;
    const auto corr = discrete_correspondences(uniform_flow(w, h, 40.0, 0.0));
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    Rng stream(2718);
    for (int rep = 0; rep < 256; ++rep) {
        Rng rng(rep);
        const NoiseGrid z = sample_noise_grid(w, h, 1, rng);
        const NoiseGrid out = transport(z, corr, stream.derive(rep).stream_key());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < 40; ++x) {  // starved columns
                sum += out.at(x, y, 0);
                sq += out.at(x, y, 0) * out.at(x, y, 0);
                ++n;
            }
    }
    REQUIRE(n >= 500000);
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    CHECK(var > 0.994);
    CHECK(var < 1.006);
}

TEST_CASE("transport is deterministic") {
    Rng rng(7);
    const NoiseGrid z = sample_noise_grid(32, 32, 2, rng);
    const auto corr = discrete_correspondences(uniform_flow(32, 32, 2.3, -1.7));
    const NoiseGrid a = transport(z, corr, 42);
    const NoiseGrid b = transport(z, corr, 42);
    CHECK(a.values == b.values);
}

TEST_CASE("shape mismatch is rejected") {
    Rng rng(9);
    const NoiseGrid z = sample_noise_grid(8, 8, 1, rng);
    const auto corr = discrete_correspondences(uniform_flow(16, 16, 0.0, 0.0));
    CHECK_THROWS_AS(transport(z, corr, 0), Error);
}

TEST_CASE("no NaN or Inf under extreme random flows") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        homog::FlowField f(24, 24);
        for (std::size_t i = 0; i < f.u.size(); ++i) {
            f.u[i] = rng.uniform(-1000.0, 1000.0);
            f.v[i] = rng.uniform(-1000.0, 1000.0);
        }
        NoiseGrid z = sample_noise_grid(24, 24, 1, rng);
        const NoiseGrid out = transport(z, discrete_correspondences(f), rng.next_u64());
        for (double v : out.values) CHECK(std::isfinite(v));
    }
}

TEST_CASE("fixed trajectory keeps all frames identical") {
    Rng rng(11);
    const NoiseGrid initial = sample_noise_grid(16, 16, 1, rng);
    const se3::Trajectory traj =
        se3::synthesize_trajectory({{se3::MotionKind::fixed, 0.0}}, 6, 5.0);
    const NoiseVolume vol = noise::warp_noise_volume(initial, traj,
                                                     homog::Intrinsics::centered(16, 16), 5.0,
                                                     Rng(11, 1));
    REQUIRE(vol.frame_count() == 7);
    for (const NoiseGrid& g : vol.frames) CHECK(g.values == initial.values);
}

TEST_CASE("warp-aligned frames stay correlated under push_in") {
    // Transport is deterministic given correspondences: corr(frame t pixel,
    // its target in frame t+1) should be near 1 on non-merged pixels.
    const homog::Intrinsics K = homog::Intrinsics::centered(64, 64);
    const double z_ref = 5.0;
    const se3::Trajectory traj =
        se3::synthesize_trajectory({{se3::MotionKind::push_in, 0.1}}, 8, z_ref);
    double num = 0.0, da = 0.0, db = 0.0;
    for (int seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const NoiseGrid initial = sample_noise_grid(64, 64, 1, rng);
        const NoiseVolume vol = noise::warp_noise_volume(initial, traj, K, z_ref, Rng(seed, 2));
        for (int t = 0; t + 1 < vol.frame_count(); ++t) {
            const se3::Pose rel = se3::relative_pose(traj.poses[t], traj.poses[t + 1]);
            const auto flow = homog::flow_from_homography(
                homog::homography_from_relative(K, rel, z_ref), 64, 64);
            const auto corr = discrete_correspondences(flow);
            for (std::size_t tgt = 0; tgt < 64 * 64; ++tgt) {
                if (corr.count(tgt) != 1) continue;
                const double a = vol.frames[t].values[corr.sources[corr.offsets[tgt]]];
                const double b = vol.frames[t + 1].values[tgt];
                num += a * b;
                da += a * a;
                db += b * b;
            }
        }
    }
    CHECK(num / std::sqrt(da * db) > 0.9);
}

TEST_CASE("49-frame pan keeps per-frame variance near 1") {
    const homog::Intrinsics K = homog::Intrinsics::centered(64, 64);
    const se3::Trajectory traj =
        se3::synthesize_trajectory({{se3::MotionKind::pan_left, 0.02}}, 48, 5.0);
    for (int seed = 0; seed < 3; ++seed) {
        Rng rng(seed + 100);
        const NoiseGrid initial = sample_noise_grid(64, 64, 4, rng);
        const NoiseVolume vol =
            noise::warp_noise_volume(initial, traj, K, 5.0, Rng(seed, 3));
        for (const NoiseGrid& g : vol.frames) {
            double sum = 0.0, sq = 0.0;
            for (double v : g.values) {
                sum += v;
                sq += v * v;
            }
            const double n = static_cast<double>(g.values.size());
            const double var = sq / n - (sum / n) * (sum / n);
            CHECK(var > 0.95);
            CHECK(var < 1.05);
        }
    }
}
