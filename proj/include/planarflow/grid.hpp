#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "planarflow/error.hpp"

namespace planarflow {

// Row-major H x W scalar grid. Used for video frames, latent frames and
// per-plane noise storage alike; all values are doubles internally and only
// the serialized formats narrow to float32.
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int w, int h, double fill = 0.0)
        : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return v.size(); }

    bool same_shape(const Grid& o) const { return width == o.width && height == o.height; }
};

// Frame-major stack of equally sized grids (a latent or a video).
struct Volume {
    std::vector<Grid> frames;

    Volume() = default;
    Volume(int frame_count, int w, int h, double fill = 0.0)
        : frames(static_cast<std::size_t>(frame_count), Grid(w, h, fill)) {}

    int frame_count() const { return static_cast<int>(frames.size()); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    std::size_t element_count() const {
        return frames.empty() ? 0 : frames.size() * frames.front().size();
    }
};

inline void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b))
        raise(ErrorKind::shape_mismatch, std::string(what) + ": grid shapes differ");
}

inline double grid_mean(const Grid& g) {
    double s = 0.0;
    for (double x : g.v) s += x;
    return g.v.empty() ? 0.0 : s / static_cast<double>(g.v.size());
}

inline double grid_variance(const Grid& g) {
    if (g.v.empty()) return 0.0;
    const double m = grid_mean(g);
    double s = 0.0;
    for (double x : g.v) s += (x - m) * (x - m);
    return s / static_cast<double>(g.v.size());
}

// Mean squared central gradient magnitude; the texture-richness measure that
// gates trajectory estimation.
inline double gradient_energy(const Grid& g) {
    if (g.width < 3 || g.height < 3) return 0.0;
    double s = 0.0;
    for (int y = 1; y + 1 < g.height; ++y) {
        for (int x = 1; x + 1 < g.width; ++x) {
            const double gx = 0.5 * (g.at(x + 1, y) - g.at(x - 1, y));
            const double gy = 0.5 * (g.at(x, y + 1) - g.at(x, y - 1));
            s += gx * gx + gy * gy;
        }
    }
    return s / (static_cast<double>(g.width - 2) * (g.height - 2));
}

inline bool all_finite(const Grid& g) {
    for (double x : g.v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Volume& v) {
    for (const Grid& g : v.frames)
        if (!all_finite(g)) return false;
    return true;
}

} // namespace planarflow
