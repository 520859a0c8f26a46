#include "planarflow/noise.hpp"

#include <cmath>

#include "planarflow/error.hpp"

namespace planarflow::noise {

NoiseGrid sample_noise_grid(int width, int height, int channels, Rng& rng) {
    if (width < 1 || height < 1 || channels < 1)
        raise(ErrorKind::invalid_argument, "sample_noise_grid: empty shape");
    NoiseGrid g(width, height, channels);
    for (double& x : g.values) x = rng.normal();
    return g;
}

std::uint64_t DensityMap::total() const {
    std::uint64_t s = 0;
    for (std::uint32_t c : counts) s += c;
    return s;
}

namespace {

// Round half away from zero, per axis.
long round_away(double x) { return std::lround(x); }

} // namespace

Correspondences discrete_correspondences(const homog::FlowField& flow) {
    const int w = flow.width;
    const int h = flow.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    Correspondences corr;
    corr.width = w;
    corr.height = h;
    corr.density.width = w;
    corr.density.height = h;
    corr.density.counts.assign(n, 0);

    // First pass: targets and density.
    std::vector<std::int64_t> target_of(n, -1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!flow.valid(x, y)) continue;
            const std::size_t i = flow.index(x, y);
            const long tx = round_away(x + flow.u[i]);
            const long ty = round_away(y + flow.v[i]);
            if (tx < 0 || tx >= w || ty < 0 || ty >= h) continue;
            const std::size_t t = static_cast<std::size_t>(ty) * w + tx;
            target_of[i] = static_cast<std::int64_t>(t);
            ++corr.density.counts[t];
        }
    }

    // Second pass: bucket sources by target (counting sort).
    corr.offsets.assign(n + 1, 0);
    for (std::size_t t = 0; t < n; ++t)
        corr.offsets[t + 1] = corr.offsets[t] + corr.density.counts[t];
    corr.sources.resize(corr.offsets[n]);
    std::vector<std::uint32_t> cursor(corr.offsets.begin(), corr.offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (target_of[i] < 0) continue;
        corr.sources[cursor[static_cast<std::size_t>(target_of[i])]++] =
            static_cast<std::uint32_t>(i);
    }
    return corr;
}

NoiseGrid transport(const NoiseGrid& z, const Correspondences& corr,
                    std::uint64_t disocclusion_key) {
    if (z.width != corr.width || z.height != corr.height)
        raise(ErrorKind::shape_mismatch, "transport: grid and correspondence shapes differ");

    NoiseGrid out(z.width, z.height, z.channels);
    const std::size_t plane = z.plane_size();
    for (std::size_t t = 0; t < plane; ++t) {
        const std::uint32_t k = corr.count(t);
        if (k == 0) {
            for (int c = 0; c < z.channels; ++c)
                out.values[c * plane + t] =
                    keyed_normal(disocclusion_key, t * static_cast<std::uint64_t>(z.channels) + c);
            continue;
        }
        const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
        for (int c = 0; c < z.channels; ++c) {
            double sum = 0.0;
            for (std::uint32_t j = corr.offsets[t]; j < corr.offsets[t + 1]; ++j)
                sum += z.values[c * plane + corr.sources[j]];
            out.values[c * plane + t] = sum * inv_sqrt_k;
        }
    }
    return out;
}

NoiseVolume warp_noise_volume(const NoiseGrid& initial, const se3::Trajectory& trajectory,
                              const homog::Intrinsics& K, double z_ref,
                              const Rng& disocclusion_stream) {
    if (trajectory.poses.empty())
        raise(ErrorKind::insufficient_data, "warp_noise_volume: empty trajectory");

    NoiseVolume volume;
    volume.frames.reserve(trajectory.poses.size());
    volume.frames.push_back(initial);
    for (std::size_t t = 0; t + 1 < trajectory.poses.size(); ++t) {
        const se3::Pose rel = se3::relative_pose(trajectory.poses[t], trajectory.poses[t + 1]);
        const homog::Homography H = homog::homography_from_relative(K, rel, z_ref);
        const homog::FlowField flow = homog::flow_from_homography(H, initial.width, initial.height);
        const Correspondences corr = discrete_correspondences(flow);
        const std::uint64_t frame_key = disocclusion_stream.derive(t + 1).stream_key();
        volume.frames.push_back(transport(volume.frames.back(), corr, frame_key));
    }
    return volume;
}

} // namespace planarflow::noise
