#pragma once

#include <cstdint>
#include <vector>

#include "planarflow/homography.hpp"
#include "planarflow/rng.hpp"
#include "planarflow/se3.hpp"

namespace planarflow::noise {

// W x H x C grid of latent scalars, stored channel-plane major. Freshly
// sampled grids are i.i.d. standard normal.
struct NoiseGrid {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;

    NoiseGrid() = default;
    NoiseGrid(int w, int h, int c)
        : width(w), height(h), channels(c),
          values(static_cast<std::size_t>(w) * h * c, 0.0) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
    double& at(int x, int y, int c) { return values[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y, int c) const { return values[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
};

NoiseGrid sample_noise_grid(int width, int height, int channels, Rng& rng);

// Number of incoming transported contributions per target pixel.
struct DensityMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> counts;

    std::uint32_t at(int x, int y) const { return counts[static_cast<std::size_t>(y) * width + x]; }
    std::uint64_t total() const;
};

// Discrete v -> v' mapping induced by rounding the flow, grouped by target
// pixel so transport can visit each target independently.
struct Correspondences {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> sources;  // source linear indices, grouped by target
    std::vector<std::uint32_t> offsets;  // per-target [begin, end) into sources; size w*h+1
    DensityMap density;

    std::uint32_t count(std::size_t target) const { return offsets[target + 1] - offsets[target]; }
};

// Rounds v + f(v) per axis (half away from zero). Sentinel source pixels and
// correspondences landing outside the grid are dropped.
Correspondences discrete_correspondences(const homog::FlowField& flow);

// z_{t+1}(v') = rho(v')^{-1/2} * sum of incoming z_t(v). Targets nobody maps
// to (disocclusions) draw fresh normals from the counter stream keyed by
// (disocclusion_key, pixel, channel), so evaluation order is irrelevant.
NoiseGrid transport(const NoiseGrid& z, const Correspondences& corr,
                    std::uint64_t disocclusion_key);

struct NoiseVolume {
    std::vector<NoiseGrid> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
};

// Frame 0 is `initial`; frame t+1 transports frame t along the flow induced
// by the relative pose E_t -> E_{t+1}. Disocclusion noise is keyed by frame.
NoiseVolume warp_noise_volume(const NoiseGrid& initial, const se3::Trajectory& trajectory,
                              const homog::Intrinsics& K, double z_ref,
                              const Rng& disocclusion_stream);

} // namespace planarflow::noise
