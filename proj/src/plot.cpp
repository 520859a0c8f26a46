#include "planarflow/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "planarflow/error.hpp"
#include "planarflow/png.hpp"

namespace planarflow::plot {

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

struct Canvas {
    int width, height;
    std::vector<std::uint8_t> px;  // rgb

    Canvas(int w, int h, Rgb fill) : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3) {
        for (int i = 0; i < w * h; ++i) set_index(i, fill);
    }

    void set_index(int i, Rgb c) {
        px[3 * static_cast<std::size_t>(i)] = c.r;
        px[3 * static_cast<std::size_t>(i) + 1] = c.g;
        px[3 * static_cast<std::size_t>(i) + 2] = c.b;
    }

    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        set_index(y * width + x, c);
    }

    void line(double x0, double y0, double x1, double y1, Rgb c) {
        const double dx = x1 - x0, dy = y1 - y0;
        const int steps = std::max(2, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) * 2);
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            set(static_cast<int>(std::lround(x0 + t * dx)),
                static_cast<int>(std::lround(y0 + t * dy)), c);
        }
    }

    void rect(int x0, int y0, int x1, int y1, Rgb c) {
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) set(x, y, c);
    }
};

// 5x7 font covering the characters the charts actually print.
struct Glyph {
    char ch;
    const char* rows[7];
};

const Glyph kGlyphs[] = {
    {'0', {"01110", "10001", "10011", "10101", "11001", "10001", "01110"}},
    {'1', {"00100", "01100", "00100", "00100", "00100", "00100", "01110"}},
    {'2', {"01110", "10001", "00001", "00110", "01000", "10000", "11111"}},
    {'3', {"01110", "10001", "00001", "00110", "00001", "10001", "01110"}},
    {'4', {"00010", "00110", "01010", "10010", "11111", "00010", "00010"}},
    {'5', {"11111", "10000", "11110", "00001", "00001", "10001", "01110"}},
    {'6', {"01110", "10000", "11110", "10001", "10001", "10001", "01110"}},
    {'7', {"11111", "00001", "00010", "00100", "01000", "01000", "01000"}},
    {'8', {"01110", "10001", "10001", "01110", "10001", "10001", "01110"}},
    {'9', {"01110", "10001", "10001", "01111", "00001", "00001", "01110"}},
    {'.', {"00000", "00000", "00000", "00000", "00000", "01100", "01100"}},
    {'-', {"00000", "00000", "00000", "11111", "00000", "00000", "00000"}},
    {'+', {"00000", "00100", "00100", "11111", "00100", "00100", "00000"}},
    {'e', {"00000", "00000", "01110", "10001", "11111", "10000", "01111"}},
    {'_', {"00000", "00000", "00000", "00000", "00000", "00000", "11111"}},
    {' ', {"00000", "00000", "00000", "00000", "00000", "00000", "00000"}},
    {'a', {"00000", "00000", "01110", "00001", "01111", "10001", "01111"}},
    {'b', {"10000", "10000", "11110", "10001", "10001", "10001", "11110"}},
    {'c', {"00000", "00000", "01111", "10000", "10000", "10000", "01111"}},
    {'d', {"00001", "00001", "01111", "10001", "10001", "10001", "01111"}},
    {'f', {"00110", "01000", "11110", "01000", "01000", "01000", "01000"}},
    {'g', {"00000", "01111", "10001", "10001", "01111", "00001", "01110"}},
    {'h', {"10000", "10000", "11110", "10001", "10001", "10001", "10001"}},
    {'i', {"00100", "00000", "01100", "00100", "00100", "00100", "01110"}},
    {'j', {"00010", "00000", "00110", "00010", "00010", "10010", "01100"}},
    {'k', {"10000", "10010", "10100", "11000", "10100", "10010", "10001"}},
    {'l', {"01100", "00100", "00100", "00100", "00100", "00100", "01110"}},
    {'m', {"00000", "00000", "11010", "10101", "10101", "10101", "10101"}},
    {'n', {"00000", "00000", "11110", "10001", "10001", "10001", "10001"}},
    {'o', {"00000", "00000", "01110", "10001", "10001", "10001", "01110"}},
    {'p', {"00000", "11110", "10001", "10001", "11110", "10000", "10000"}},
    {'q', {"00000", "01111", "10001", "10001", "01111", "00001", "00001"}},
    {'r', {"00000", "00000", "10110", "11000", "10000", "10000", "10000"}},
    {'s', {"00000", "00000", "01111", "10000", "01110", "00001", "11110"}},
    {'t', {"01000", "01000", "11110", "01000", "01000", "01001", "00110"}},
    {'u', {"00000", "00000", "10001", "10001", "10001", "10001", "01111"}},
    {'v', {"00000", "00000", "10001", "10001", "10001", "01010", "00100"}},
    {'w', {"00000", "00000", "10101", "10101", "10101", "10101", "01010"}},
    {'x', {"00000", "00000", "10001", "01010", "00100", "01010", "10001"}},
    {'y', {"00000", "10001", "10001", "01111", "00001", "10001", "01110"}},
    {'z', {"00000", "00000", "11111", "00010", "00100", "01000", "11111"}},
};

const Glyph* find_glyph(char c) {
    const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const Glyph& g : kGlyphs)
        if (g.ch == lower) return &g;
    return nullptr;
}

void draw_text(Canvas& canvas, int x, int y, const std::string& text, Rgb c) {
    int cx = x;
    for (char ch : text) {
        if (const Glyph* g = find_glyph(ch)) {
            for (int r = 0; r < 7; ++r)
                for (int col = 0; col < 5; ++col)
                    if (g->rows[r][col] == '1') canvas.set(cx + col, y + r, c);
        }
        cx += 6;
    }
}

std::string short_number(double v) {
    char buf[32];
    if (v == 0.0)
        std::snprintf(buf, sizeof(buf), "0");
    else if (std::abs(v) >= 0.01 && std::abs(v) < 10000.0)
        std::snprintf(buf, sizeof(buf), "%.3g", v);
    else
        std::snprintf(buf, sizeof(buf), "%.1e", v);
    return buf;
}

constexpr Rgb kBackground{250, 250, 250};
constexpr Rgb kAxis{60, 60, 60};
constexpr Rgb kGridLine{220, 220, 220};
const Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                        {255, 127, 14}, {148, 103, 189}, {23, 190, 207}};

} // namespace

void line_chart(const std::string& path, const std::vector<Series>& series,
                const std::string& title, int width, int height) {
    if (series.empty())
        raise(ErrorKind::invalid_argument, "line_chart: no series");

    Canvas canvas(width, height, kBackground);
    const int mx0 = 56, my0 = 28, mx1 = width - 16, my1 = height - 32;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t n = 0;
    for (const Series& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (n == 0 || !std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        hi += 0.5;
        lo -= 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    for (int g = 0; g <= 4; ++g) {
        const int y = my0 + (my1 - my0) * g / 4;
        canvas.line(mx0, y, mx1, y, kGridLine);
        draw_text(canvas, 4, y - 3, short_number(hi - (hi - lo) * g / 4), kAxis);
    }
    canvas.line(mx0, my0, mx0, my1, kAxis);
    canvas.line(mx0, my1, mx1, my1, kAxis);
    draw_text(canvas, mx0, 8, title, kAxis);
    draw_text(canvas, mx0, my1 + 8, "0", kAxis);
    draw_text(canvas, mx1 - 30, my1 + 8, short_number(static_cast<double>(n ? n - 1 : 0)),
              kAxis);

    int color = 0;
    int legend_x = mx0 + 8;
    for (const Series& s : series) {
        const Rgb c = kPalette[color % 6];
        ++color;
        if (s.values.size() >= 2) {
            for (std::size_t i = 0; i + 1 < s.values.size(); ++i) {
                const auto px = [&](std::size_t k) {
                    return mx0 + (mx1 - mx0) * static_cast<double>(k) /
                                     static_cast<double>(n - 1);
                };
                const auto py = [&](double v) {
                    return my1 - (my1 - my0) * (v - lo) / (hi - lo);
                };
                canvas.line(px(i), py(s.values[i]), px(i + 1), py(s.values[i + 1]), c);
            }
        }
        draw_text(canvas, legend_x, my0 - 12, s.label, c);
        legend_x += 6 * static_cast<int>(s.label.size()) + 14;
    }
    png::write_file(path, png::encode_rgb(canvas.px, width, height));
}

void bar_chart(const std::string& path, const std::vector<std::pair<std::string, double>>& bars,
               const std::string& title, int width, int height) {
    if (bars.empty())
        raise(ErrorKind::invalid_argument, "bar_chart: no bars");
    Canvas canvas(width, height, kBackground);
    double hi = 0.0, lo = 0.0;
    for (const auto& [label, v] : bars) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const int mx0 = 110, my0 = 28, mx1 = width - 60, my1 = height - 16;
    draw_text(canvas, 8, 8, title, kAxis);
    const int row_h = (my1 - my0) / static_cast<int>(bars.size());
    const int zero_x = mx0 + static_cast<int>((0.0 - lo) / (hi - lo) * (mx1 - mx0));
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& [label, v] = bars[i];
        const int y = my0 + static_cast<int>(i) * row_h;
        const int vx = mx0 + static_cast<int>((v - lo) / (hi - lo) * (mx1 - mx0));
        canvas.rect(std::min(zero_x, vx), y + 3, std::max(zero_x, vx), y + row_h - 5,
                    kPalette[i % 6]);
        draw_text(canvas, 6, y + row_h / 2 - 4, label, kAxis);
        draw_text(canvas, mx1 + 4, y + row_h / 2 - 4, short_number(v), kAxis);
    }
    canvas.line(zero_x, my0, zero_x, my1, kAxis);
    png::write_file(path, png::encode_rgb(canvas.px, width, height));
}

void flow_image(const std::string& path, const homog::FlowField& flow) {
    double max_mag = 1e-9;
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        if (flow.u[i] == homog::FlowField::kInvalidFlow) continue;
        max_mag = std::max(max_mag, std::hypot(flow.u[i], flow.v[i]));
    }
    std::vector<std::uint8_t> px(flow.u.size() * 3);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        if (flow.u[i] == homog::FlowField::kInvalidFlow) {
            px[3 * i] = 200;
            px[3 * i + 1] = 0;
            px[3 * i + 2] = 0;
            continue;
        }
        // Signed components on green/blue, centered at 128.
        const auto enc = [&](double v) {
            return static_cast<std::uint8_t>(
                std::lround(std::clamp(0.5 + 0.5 * v / max_mag, 0.0, 1.0) * 255.0));
        };
        px[3 * i] = static_cast<std::uint8_t>(
            std::lround(std::hypot(flow.u[i], flow.v[i]) / max_mag * 255.0));
        px[3 * i + 1] = enc(flow.u[i]);
        px[3 * i + 2] = enc(flow.v[i]);
    }
    png::write_file(path, png::encode_rgb(px, flow.width, flow.height));
}

void frame_strip(const std::string& path, const Volume& video, int max_frames) {
    if (video.frame_count() == 0)
        raise(ErrorKind::invalid_argument, "frame_strip: empty video");
    const int n = std::min(max_frames, video.frame_count());
    const int w = video.width(), h = video.height();
    const int gap = 2;
    const int total_w = n * w + (n - 1) * gap;
    std::vector<std::uint8_t> px(static_cast<std::size_t>(total_w) * h, 255);
    for (int k = 0; k < n; ++k) {
        // Spread picks across the clip when truncating.
        const int t = (n == video.frame_count()) ? k
                                                 : k * (video.frame_count() - 1) / (n - 1);
        const Grid& g = video.frames[t];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                px[static_cast<std::size_t>(y) * total_w + k * (w + gap) + x] =
                    static_cast<std::uint8_t>(
                        std::lround(std::clamp(g.at(x, y), 0.0, 1.0) * 255.0));
    }
    png::write_file(path, png::encode_gray(px, total_w, h));
}

} // namespace planarflow::plot
