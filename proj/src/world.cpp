#include "planarflow/world.hpp"

#include <algorithm>
#include <cmath>

#include "planarflow/error.hpp"
#include "planarflow/rng.hpp"

namespace planarflow::world {

namespace {

double bilinear(const Grid& g, double x, double y) {
    if (x < 0.0 || y < 0.0 || x > g.width - 1.0 || y > g.height - 1.0) return 0.0;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, g.width - 1);
    const int y1 = std::min(y0 + 1, g.height - 1);
    const double ax = x - x0;
    const double ay = y - y0;
    return (1.0 - ay) * ((1.0 - ax) * g.at(x0, y0) + ax * g.at(x1, y0)) +
           ay * ((1.0 - ax) * g.at(x0, y1) + ax * g.at(x1, y1));
}

double catrom(double p0, double p1, double p2, double p3, double t) {
    return p1 + 0.5 * t *
                    (p2 - p0 +
                     t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                          t * (3.0 * (p1 - p2) + p3 - p0)));
}

// Catmull-Rom sampling with clamped borders, 0 outside the grid. Bilinear
// sampling carries a fraction-of-a-pixel phase-dependent blur that biases
// sub-pixel matching; the cubic kernel keeps that well below 0.01 px.
double cubic_sample(const Grid& g, double x, double y) {
    if (x < 0.0 || y < 0.0 || x > g.width - 1.0 || y > g.height - 1.0) return 0.0;
    const int x1 = static_cast<int>(std::floor(x));
    const int y1 = static_cast<int>(std::floor(y));
    const double tx = x - x1;
    const double ty = y - y1;
    const auto cx = [&](int xi) { return std::clamp(xi, 0, g.width - 1); };
    const auto cy = [&](int yi) { return std::clamp(yi, 0, g.height - 1); };
    double rows[4];
    for (int r = 0; r < 4; ++r) {
        const int yy = cy(y1 - 1 + r);
        rows[r] = catrom(g.at(cx(x1 - 1), yy), g.at(cx(x1), yy), g.at(cx(x1 + 1), yy),
                         g.at(cx(x1 + 2), yy), tx);
    }
    return catrom(rows[0], rows[1], rows[2], rows[3], ty);
}

// Value noise for one octave: bilinear interpolation of a keyed random
// lattice, values in [-0.5, 0.5].
double octave_noise(std::uint64_t key, int octave, double fx, double fy) {
    const int cells = 8 << octave;
    const double gx = fx * cells;
    const double gy = fy * cells;
    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const double ax = gx - x0;
    const double ay = gy - y0;
    auto lattice = [&](int lx, int ly) {
        const std::uint64_t cell =
            (static_cast<std::uint64_t>(octave) << 40) |
            (static_cast<std::uint64_t>(ly & 0xFFFFF) << 20) |
            static_cast<std::uint64_t>(lx & 0xFFFFF);
        const auto blk = philox::generate(key, 2, cell);
        return static_cast<double>(blk.x[0]) * 0x1.0p-32 - 0.5;
    };
    // Smoothstep blending keeps the texture C1 across lattice cells.
    const double sx = ax * ax * (3.0 - 2.0 * ax);
    const double sy = ay * ay * (3.0 - 2.0 * ay);
    return (1.0 - sy) * ((1.0 - sx) * lattice(x0, y0) + sx * lattice(x0 + 1, y0)) +
           sy * ((1.0 - sx) * lattice(x0, y0 + 1) + sx * lattice(x0 + 1, y0 + 1));
}

} // namespace

bool has_texture(const Grid& frame) {
    return gradient_energy(frame) >= kMinGradientEnergy;
}

Scene generate_scene(std::uint64_t seed, double smoothness, int texture_width,
                     int texture_height, double z_ref) {
    if (!(smoothness > 0.0))
        raise(ErrorKind::invalid_argument, "generate_scene: smoothness must be positive");
    if (texture_width < 4 || texture_height < 4)
        raise(ErrorKind::invalid_argument, "generate_scene: texture too small");

    Scene scene;
    scene.seed = seed;
    scene.plane_depth = z_ref;
    scene.texture = Grid(texture_width, texture_height);

    const std::uint64_t key = Rng(seed, 0x5ce7eull).stream_key();
    constexpr int kOctaves = 4;
    double amp[kOctaves];
    for (int o = 0; o < kOctaves; ++o) amp[o] = 2.2 * std::exp(-smoothness * (o + 1));

    for (int y = 0; y < texture_height; ++y) {
        const double fy = static_cast<double>(y) / texture_height;
        for (int x = 0; x < texture_width; ++x) {
            const double fx = static_cast<double>(x) / texture_width;
            double v = 0.5;
            for (int o = 0; o < kOctaves; ++o) v += amp[o] * octave_noise(key, o, fx, fy);
            scene.texture.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return scene;
}

namespace {

// Intersects the pixel ray of `pose` with the world plane z = z_ref.
// Returns false when the intersection lies behind the camera.
bool plane_point(const se3::Pose& pose, const homog::Intrinsics& K, double z_ref, double px,
                 double py, Eigen::Vector3d& out) {
    const Eigen::Vector3d d((px - K.cx) / K.fx, (py - K.cy) / K.fy, 1.0);
    const Eigen::Matrix3d rt = pose.rotation.transpose();
    const Eigen::Vector3d a = rt * d;
    const Eigen::Vector3d b = rt * pose.translation;
    if (std::abs(a.z()) < 1e-12) return false;
    const double s = (z_ref + b.z()) / a.z();
    if (s <= 1e-9) return false;
    out = s * a - b;
    return true;
}

} // namespace

std::optional<Eigen::Vector2d> texture_position(const Scene& scene, const se3::Pose& pose,
                                                const homog::Intrinsics& K, double px,
                                                double py) {
    Eigen::Vector3d p;
    if (!plane_point(pose, K, scene.plane_depth, px, py, p)) return std::nullopt;
    return Eigen::Vector2d(p.x() * K.fx / scene.plane_depth + 0.5 * (scene.texture.width - 1),
                           p.y() * K.fy / scene.plane_depth + 0.5 * (scene.texture.height - 1));
}

Grid render(const Scene& scene, const se3::Pose& pose, const homog::Intrinsics& K, int width,
            int height) {
    Grid frame(width, height);
    std::size_t visible = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const auto pos = texture_position(scene, pose, K, x, y);
            if (!pos) continue;
            ++visible;
            frame.at(x, y) = std::clamp(cubic_sample(scene.texture, pos->x(), pos->y()), 0.0, 1.0);
        }
    }
    if (visible == 0)
        raise(ErrorKind::domain, "render: camera does not face the plane");
    return frame;
}

Video render_video(const Scene& scene, const se3::Trajectory& trajectory,
                   const homog::Intrinsics& K, int width, int height) {
    Video video;
    video.frames.reserve(trajectory.poses.size());
    for (const se3::Pose& pose : trajectory.poses)
        video.frames.push_back(render(scene, pose, K, width, height));
    return video;
}

namespace {

Grid downsample2(const Grid& g) {
    Grid out(g.width / 2, g.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = 0.25 * (g.at(2 * x, 2 * y) + g.at(2 * x + 1, 2 * y) +
                                   g.at(2 * x, 2 * y + 1) + g.at(2 * x + 1, 2 * y + 1));
    return out;
}


constexpr int kBlock = 8;
constexpr int kStride = 4;
constexpr int kSearchRadius = 4;
constexpr int kPyramidLevels = 3;

double block_ssd(const Grid& a, const Grid& b, int ax, int ay, int bx, int by) {
    double s = 0.0;
    for (int dy = 0; dy < kBlock; ++dy)
        for (int dx = 0; dx < kBlock; ++dx) {
            const double d = a.at(ax + dx, ay + dy) - b.at(bx + dx, by + dy);
            s += d * d;
        }
    return s / static_cast<double>(kBlock * kBlock);
}

// Mean squared difference with both blocks resampled at +-d/2 (symmetric
// matching: equal interpolation blur on both sides cancels the leading
// sub-pixel bias). Samples whose footprint leaves either frame are excluded;
// counting them as mismatches would drag border blocks toward zero flow and
// corrupt the fitted perspective terms.
double frac_block_ssd(const Grid& a, const Grid& b, int ax, int ay, double dx, double dy) {
    double s = 0.0;
    int valid = 0;
    const double hx = 0.5 * dx;
    const double hy = 0.5 * dy;
    for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x) {
            const double px = ax + x;
            const double py = ay + y;
            if (px - hx < 0.0 || py - hy < 0.0 || px - hx > a.width - 1.0 ||
                py - hy > a.height - 1.0)
                continue;
            if (px + hx < 0.0 || py + hy < 0.0 || px + hx > b.width - 1.0 ||
                py + hy > b.height - 1.0)
                continue;
            const double d =
                cubic_sample(a, px - hx, py - hy) - cubic_sample(b, px + hx, py + hy);
            s += d * d;
            ++valid;
        }
    if (valid < kBlock * kBlock / 2) return std::numeric_limits<double>::infinity();
    return s / static_cast<double>(valid);
}

// Golden-section minimization along one axis of the interpolated SSD. The
// quadratic-fit alternative is biased when the SSD is asymmetric around the
// minimum, which shows up as a systematic motion underestimate.
double golden_refine(const Grid& a, const Grid& b, int ax, int ay, double other, double lo,
                     double hi, bool horizontal) {
    constexpr double kInvPhi = 0.6180339887498949;
    auto eval = [&](double d) {
        return horizontal ? frac_block_ssd(a, b, ax, ay, d, other)
                          : frac_block_ssd(a, b, ax, ay, other, d);
    };
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    for (int it = 0; it < 16; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = eval(x2);
        }
    }
    return 0.5 * (lo + hi);
}

struct BlockFlow {
    std::vector<Eigen::Vector2d> src;
    std::vector<Eigen::Vector2d> dst;
    double residual_rms = 0.0;
};

// One matching pass at a single level; `init` holds a per-block initial
// displacement (from the coarser level) or is empty.
void match_level(const Grid& a, const Grid& b, const Grid* init_u, const Grid* init_v,
                 bool subpixel, Grid& flow_u, Grid& flow_v, double* residual) {
    const int bw = std::max(1, (a.width - kBlock) / kStride + 1);
    const int bh = std::max(1, (a.height - kBlock) / kStride + 1);
    flow_u = Grid(bw, bh);
    flow_v = Grid(bw, bh);
    double total_ssd = 0.0;
    for (int byi = 0; byi < bh; ++byi) {
        for (int bxi = 0; bxi < bw; ++bxi) {
            const int ax = std::min(bxi * kStride, a.width - kBlock);
            const int ay = std::min(byi * kStride, a.height - kBlock);
            int iu = 0, iv = 0;
            if (init_u) {
                // Nearest coarser block, displacement doubled.
                const int cx = std::min(bxi / 2, init_u->width - 1);
                const int cy = std::min(byi / 2, init_u->height - 1);
                iu = static_cast<int>(std::lround(2.0 * init_u->at(cx, cy)));
                iv = static_cast<int>(std::lround(2.0 * init_v->at(cx, cy)));
            }
            double best = std::numeric_limits<double>::infinity();
            int best_dx = 0, best_dy = 0;
            for (int dy = -kSearchRadius; dy <= kSearchRadius; ++dy) {
                for (int dx = -kSearchRadius; dx <= kSearchRadius; ++dx) {
                    const int bx2 = ax + iu + dx;
                    const int by2 = ay + iv + dy;
                    if (bx2 < 0 || by2 < 0 || bx2 + kBlock > b.width || by2 + kBlock > b.height)
                        continue;
                    const double ssd = block_ssd(a, b, ax, ay, bx2, by2);
                    if (ssd < best) {
                        best = ssd;
                        best_dx = dx;
                        best_dy = dy;
                    }
                }
            }
            if (!std::isfinite(best)) {
                flow_u.at(bxi, byi) = iu;
                flow_v.at(bxi, byi) = iv;
                continue;
            }
            double fu = iu + best_dx;
            double fv = iv + best_dy;
            if (subpixel && best > 0.0) {
                // Two rounds of per-axis golden-section within +-1 pixel.
                for (int round = 0; round < 3; ++round) {
                    fu = golden_refine(a, b, ax, ay, fv, fu - 1.0, fu + 1.0, true);
                    fv = golden_refine(a, b, ax, ay, fu, fv - 1.0, fv + 1.0, false);
                }
                const double refined = frac_block_ssd(a, b, ax, ay, fu, fv);
                if (std::isfinite(refined)) best = refined;
            }
            flow_u.at(bxi, byi) = fu;
            flow_v.at(bxi, byi) = fv;
            total_ssd += best;
        }
    }
    if (residual) *residual = std::sqrt(total_ssd / (static_cast<double>(bw) * bh));
}

BlockFlow block_match(const Grid& a, const Grid& b) {
    std::vector<Grid> pyr_a = {a}, pyr_b = {b};
    for (int l = 1; l < kPyramidLevels; ++l) {
        if (pyr_a.back().width / 2 < kBlock || pyr_a.back().height / 2 < kBlock) break;
        pyr_a.push_back(downsample2(pyr_a.back()));
        pyr_b.push_back(downsample2(pyr_b.back()));
    }

    Grid fu, fv;
    double residual = 0.0;
    for (int l = static_cast<int>(pyr_a.size()) - 1; l >= 0; --l) {
        Grid next_u, next_v;
        const bool finest = (l == 0);
        match_level(pyr_a[l], pyr_b[l], l + 1 < static_cast<int>(pyr_a.size()) ? &fu : nullptr,
                    l + 1 < static_cast<int>(pyr_a.size()) ? &fv : nullptr, finest, next_u,
                    next_v, finest ? &residual : nullptr);
        fu = std::move(next_u);
        fv = std::move(next_v);
    }

    BlockFlow out;
    out.residual_rms = residual;
    const int bw = fu.width, bh = fu.height;
    for (int byi = 0; byi < bh; ++byi) {
        for (int bxi = 0; bxi < bw; ++bxi) {
            const int ax = std::min(bxi * kStride, a.width - kBlock);
            const int ay = std::min(byi * kStride, a.height - kBlock);
            const double cx = ax + 0.5 * (kBlock - 1);
            const double cy = ay + 0.5 * (kBlock - 1);
            out.src.emplace_back(cx, cy);
            out.dst.emplace_back(cx + fu.at(bxi, byi), cy + fv.at(bxi, byi));
        }
    }
    return out;
}

} // namespace

TrajectoryEstimate estimate_trajectory(const Video& video, const homog::Intrinsics& K,
                                       double z_ref) {
    if (video.frame_count() < 2)
        raise(ErrorKind::insufficient_data, "estimate_trajectory: need at least 2 frames");
    for (const Grid& f : video.frames)
        if (!has_texture(f))
            raise(ErrorKind::degenerate, "estimate_trajectory: untrackable textureless frame");

    TrajectoryEstimate est;
    est.trajectory.poses.push_back(se3::Pose::identity());
    for (int t = 0; t + 1 < video.frame_count(); ++t) {
        const BlockFlow bf = block_match(video.frames[t], video.frames[t + 1]);
        est.residuals.push_back(bf.residual_rms);
        bool suspect = bf.residual_rms > kResidualFlagThreshold;
        se3::Pose rel;
        try {
            const homog::HomographyFit fit = homog::fit_homography(bf.src, bf.dst);
            rel = homog::decompose_homography(fit.homography, K, z_ref);
        } catch (const Error&) {
            suspect = true;  // keep identity relative pose for the broken transition
        }
        est.high_residual.push_back(suspect);
        est.trajectory.poses.push_back(rel.compose(est.trajectory.poses.back()));
    }
    return est;
}

Rerendered rerender_from_estimate(const Video& video, const se3::Trajectory& e_hat,
                                  const homog::Intrinsics& K, double z_ref) {
    if (video.frame_count() != static_cast<int>(e_hat.poses.size()))
        raise(ErrorKind::shape_mismatch,
              "rerender_from_estimate: trajectory length must match frame count");
    if (video.frame_count() == 0)
        raise(ErrorKind::insufficient_data, "rerender_from_estimate: empty video");

    const int w = video.width();
    const int h = video.height();
    const int n = video.frame_count();

    std::vector<homog::Homography> to_frame;  // frame-0 pixels -> frame-t pixels
    to_frame.reserve(n);
    for (int t = 0; t < n; ++t)
        to_frame.push_back(homog::homography_from_relative(
            K, se3::relative_pose(e_hat.poses[0], e_hat.poses[t]), z_ref));

    Rerendered rr;
    rr.canonical = Grid(w, h);
    rr.canonical_coverage.assign(static_cast<std::size_t>(w) * h, 0);

    std::vector<double> samples;
    samples.reserve(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            samples.clear();
            for (int t = 0; t < n; ++t) {
                const Eigen::Vector2d p = to_frame[t].apply(Eigen::Vector2d(x, y));
                if (p.x() < 0.0 || p.y() < 0.0 || p.x() > w - 1.0 || p.y() > h - 1.0) continue;
                samples.push_back(bilinear(video.frames[t], p.x(), p.y()));
            }
            if (samples.empty()) continue;
            const std::size_t mid = samples.size() / 2;
            std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
            double med = samples[mid];
            if (samples.size() % 2 == 0) {
                const double lower = *std::max_element(samples.begin(), samples.begin() + mid);
                med = 0.5 * (med + lower);
            }
            rr.canonical.at(x, y) = med;
            rr.canonical_coverage[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }

    rr.video = Video(n, w, h);
    rr.interior.assign(n, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0));
    for (int t = 0; t < n; ++t) {
        const Eigen::Matrix3d inv = to_frame[t].h.inverse();
        const homog::Homography back = homog::Homography::from_matrix(inv);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const Eigen::Vector2d p0 = back.apply(Eigen::Vector2d(x, y));
                if (p0.x() < 0.0 || p0.y() < 0.0 || p0.x() > w - 1.0 || p0.y() > h - 1.0)
                    continue;
                const int x0 = static_cast<int>(std::floor(p0.x()));
                const int y0 = static_cast<int>(std::floor(p0.y()));
                const int x1 = std::min(x0 + 1, w - 1);
                const int y1 = std::min(y0 + 1, h - 1);
                const auto covered = [&](int cx, int cy) {
                    return rr.canonical_coverage[static_cast<std::size_t>(cy) * w + cx] != 0;
                };
                if (!covered(x0, y0) || !covered(x1, y0) || !covered(x0, y1) || !covered(x1, y1))
                    continue;
                rr.video.frames[t].at(x, y) = bilinear(rr.canonical, p0.x(), p0.y());
                rr.interior[t][static_cast<std::size_t>(y) * w + x] = 1;
            }
        }
    }
    return rr;
}

Grid render_canonical(const Rerendered& rr, const se3::Pose& pose, const homog::Intrinsics& K,
                      double z_ref, int width, int height) {
    Grid frame(width, height);
    const int cw = rr.canonical.width;
    const int ch = rr.canonical.height;
    std::size_t visible = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            Eigen::Vector3d p;
            if (!plane_point(pose, K, z_ref, x, y, p)) continue;
            ++visible;
            // Canonical pixels live in the identity camera's image plane.
            const double tx = p.x() * K.fx / z_ref + K.cx;
            const double ty = p.y() * K.fy / z_ref + K.cy;
            if (tx < 0.0 || ty < 0.0 || tx > cw - 1.0 || ty > ch - 1.0) continue;
            const int ix = static_cast<int>(std::lround(tx));
            const int iy = static_cast<int>(std::lround(ty));
            if (!rr.canonical_coverage[static_cast<std::size_t>(std::clamp(iy, 0, ch - 1)) * cw +
                                       std::clamp(ix, 0, cw - 1)])
                continue;
            frame.at(x, y) = bilinear(rr.canonical, tx, ty);
        }
    }
    if (visible == 0)
        raise(ErrorKind::domain, "render_canonical: camera does not face the plane");
    return frame;
}

} // namespace planarflow::world
