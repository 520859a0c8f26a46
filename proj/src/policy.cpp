#include "planarflow/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "planarflow/error.hpp"
#include "planarflow/optim.hpp"

namespace planarflow::policy {

Condition Condition::from_tokens(const std::vector<se3::MotionToken>& tokens) {
    if (tokens.empty())
        raise(ErrorKind::invalid_argument, "Condition: no tokens");
    Condition c;
    double magnitude = 0.0;
    const double share = 1.0 / static_cast<double>(tokens.size());
    for (const se3::MotionToken& t : tokens) {
        c.values[static_cast<int>(t.kind)] += share;
        magnitude += t.magnitude * share;
    }
    c.values[kTokenKinds] = magnitude;
    return c;
}

std::array<double, kSceneDescriptorDim> scene_descriptor(const world::Scene& scene) {
    const double mean = grid_mean(scene.texture);
    const double stddev = std::sqrt(grid_variance(scene.texture));
    const double grad = std::sqrt(gradient_energy(scene.texture));
    // Low-frequency asymmetry: mean of the left half minus the right half.
    double left = 0.0, right = 0.0;
    const int half = scene.texture.width / 2;
    for (int y = 0; y < scene.texture.height; ++y) {
        for (int x = 0; x < half; ++x) left += scene.texture.at(x, y);
        for (int x = half; x < scene.texture.width; ++x) right += scene.texture.at(x, y);
    }
    const double n = 0.5 * static_cast<double>(scene.texture.v.size());
    return {mean, stddev, grad, (left - right) / n};
}

void Condition::set_scene(const world::Scene& scene) {
    const auto d = scene_descriptor(scene);
    for (int i = 0; i < kSceneDescriptorDim; ++i) values[kTokenKinds + 1 + i] = d[i];
}

std::size_t VelocityModel::parameter_count() const {
    return b3() + output_dim();
}

VelocityModel VelocityModel::zeros(int patch, int hidden1, int hidden2) {
    VelocityModel m;
    m.patch = patch;
    m.hidden1 = hidden1;
    m.hidden2 = hidden2;
    m.params.assign(m.parameter_count(), 0.0);
    return m;
}

VelocityModel VelocityModel::create(int patch, int hidden1, int hidden2, Rng& rng) {
    VelocityModel m = zeros(patch, hidden1, hidden2);
    auto fill = [&](std::size_t offset, std::size_t count, int fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) m.params[offset + i] = scale * rng.normal();
    };
    fill(m.w1(), static_cast<std::size_t>(hidden1) * m.input_dim(), m.input_dim());
    fill(m.w2(), static_cast<std::size_t>(hidden2) * hidden1, hidden1);
    fill(m.w3(), static_cast<std::size_t>(m.output_dim()) * hidden2, hidden2);
    return m;
}

namespace {

struct PatchLayout {
    int frames = 0;
    int patches_x = 0;
    int patches_y = 0;
};

PatchLayout layout_for(const VelocityModel& model, const Volume& x) {
    if (x.frame_count() == 0)
        raise(ErrorKind::shape_mismatch, "velocity: empty latent");
    if (x.width() % model.patch != 0 || x.height() % model.patch != 0)
        raise(ErrorKind::shape_mismatch, "velocity: latent dims not divisible by patch size");
    return {x.frame_count(), x.width() / model.patch, x.height() / model.patch};
}

void build_input(const VelocityModel& model, const Grid& frame, int px, int py, double t,
                 const Condition& cond, std::vector<double>& in) {
    const int p = model.patch;
    int k = 0;
    for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x) in[k++] = frame.at(px * p + x, py * p + y);
    constexpr double two_pi = 6.283185307179586476925286766559;
    in[k++] = t;
    in[k++] = std::sin(two_pi * t);
    in[k++] = std::cos(two_pi * t);
    for (double v : cond.values) in[k++] = v;
}

struct PatchForward {
    std::vector<double> in, h1pre, h1, h2pre, h2, out;

    void init(const VelocityModel& m) {
        in.resize(m.input_dim());
        h1pre.resize(m.hidden1);
        h1.resize(m.hidden1);
        h2pre.resize(m.hidden2);
        h2.resize(m.hidden2);
        out.resize(m.output_dim());
    }

    void run(const VelocityModel& m) {
        const double* p = m.params.data();
        const int din = m.input_dim();
        for (int i = 0; i < m.hidden1; ++i) {
            double s = p[m.b1() + i];
            const double* row = p + m.w1() + static_cast<std::size_t>(i) * din;
            for (int j = 0; j < din; ++j) s += row[j] * in[j];
            h1pre[i] = s;
            h1[i] = std::tanh(s);
        }
        for (int i = 0; i < m.hidden2; ++i) {
            double s = p[m.b2() + i];
            const double* row = p + m.w2() + static_cast<std::size_t>(i) * m.hidden1;
            for (int j = 0; j < m.hidden1; ++j) s += row[j] * h1[j];
            h2pre[i] = s;
            h2[i] = std::tanh(s);
        }
        const int dout = m.output_dim();
        for (int i = 0; i < dout; ++i) {
            double s = p[m.b3() + i];
            const double* row = p + m.w3() + static_cast<std::size_t>(i) * m.hidden2;
            for (int j = 0; j < m.hidden2; ++j) s += row[j] * h2[j];
            out[i] = s;
        }
    }

    // Accumulates d<g, out>/dparams for this patch into grad.
    void backward(const VelocityModel& m, const std::vector<double>& g,
                  std::vector<double>& grad) {
        const double* p = m.params.data();
        const int din = m.input_dim();
        const int dout = m.output_dim();

        std::vector<double> dh2(m.hidden2, 0.0);
        for (int i = 0; i < dout; ++i) {
            grad[m.b3() + i] += g[i];
            double* wrow = grad.data() + m.w3() + static_cast<std::size_t>(i) * m.hidden2;
            const double* row = p + m.w3() + static_cast<std::size_t>(i) * m.hidden2;
            for (int j = 0; j < m.hidden2; ++j) {
                wrow[j] += g[i] * h2[j];
                dh2[j] += g[i] * row[j];
            }
        }
        std::vector<double> dh1(m.hidden1, 0.0);
        for (int i = 0; i < m.hidden2; ++i) {
            const double d = dh2[i] * (1.0 - h2[i] * h2[i]);
            grad[m.b2() + i] += d;
            double* wrow = grad.data() + m.w2() + static_cast<std::size_t>(i) * m.hidden1;
            const double* row = p + m.w2() + static_cast<std::size_t>(i) * m.hidden1;
            for (int j = 0; j < m.hidden1; ++j) {
                wrow[j] += d * h1[j];
                dh1[j] += d * row[j];
            }
        }
        for (int i = 0; i < m.hidden1; ++i) {
            const double d = dh1[i] * (1.0 - h1[i] * h1[i]);
            grad[m.b1() + i] += d;
            double* wrow = grad.data() + m.w1() + static_cast<std::size_t>(i) * din;
            for (int j = 0; j < din; ++j) wrow[j] += d * in[j];
        }
    }
};

} // namespace

Volume velocity(const VelocityModel& model, const Volume& x, double t, const Condition& cond) {
    const PatchLayout lay = layout_for(model, x);
    Volume out(lay.frames, x.width(), x.height());
    PatchForward pf;
    pf.init(model);
    const int p = model.patch;
    for (int f = 0; f < lay.frames; ++f) {
        for (int py = 0; py < lay.patches_y; ++py) {
            for (int px = 0; px < lay.patches_x; ++px) {
                build_input(model, x.frames[f], px, py, t, cond, pf.in);
                pf.run(model);
                int k = 0;
                for (int y = 0; y < p; ++y)
                    for (int xx = 0; xx < p; ++xx)
                        out.frames[f].at(px * p + xx, py * p + y) = pf.out[k++];
            }
        }
    }
    return out;
}

void velocity_vjp(const VelocityModel& model, const Volume& x, double t, const Condition& cond,
                  const Volume& upstream, std::vector<double>& grad) {
    const PatchLayout lay = layout_for(model, x);
    if (upstream.frame_count() != x.frame_count() || upstream.width() != x.width() ||
        upstream.height() != x.height())
        raise(ErrorKind::shape_mismatch, "velocity_vjp: upstream shape mismatch");
    if (grad.size() != model.parameter_count())
        raise(ErrorKind::shape_mismatch, "velocity_vjp: gradient vector size mismatch");

    PatchForward pf;
    pf.init(model);
    std::vector<double> g(model.output_dim());
    const int p = model.patch;
    for (int f = 0; f < lay.frames; ++f) {
        for (int py = 0; py < lay.patches_y; ++py) {
            for (int px = 0; px < lay.patches_x; ++px) {
                build_input(model, x.frames[f], px, py, t, cond, pf.in);
                pf.run(model);
                int k = 0;
                for (int y = 0; y < p; ++y)
                    for (int xx = 0; xx < p; ++xx)
                        g[k++] = upstream.frames[f].at(px * p + xx, py * p + y);
                pf.backward(model, g, grad);
            }
        }
    }
}

PretrainResult pretrain_flow_matching(const VelocityModel& model,
                                      const std::vector<PretrainExample>& dataset, int steps,
                                      double learning_rate, Rng& rng) {
    if (dataset.empty())
        raise(ErrorKind::insufficient_data, "pretrain_flow_matching: empty dataset");

    PretrainResult result;
    result.model = model;
    if (steps <= 0) return result;

    VelocityModel current = model;
    Adam opt(learning_rate);
    std::vector<double> grad(current.parameter_count());

    double running = 0.0;
    bool running_init = false;
    constexpr double kEma = 0.95;
    double best = std::numeric_limits<double>::infinity();

    for (int step = 0; step < steps; ++step) {
        const PretrainExample& ex =
            dataset[rng.uniform_index(static_cast<std::uint64_t>(dataset.size()))];
        const double t = 1.0 - rng.uniform();  // (0, 1]

        const Volume& data = ex.video;
        Volume xt(data.frame_count(), data.width(), data.height());
        Volume target(data.frame_count(), data.width(), data.height());
        for (int f = 0; f < data.frame_count(); ++f) {
            for (std::size_t i = 0; i < data.frames[f].v.size(); ++i) {
                const double eps = rng.normal();
                const double x1 = data.frames[f].v[i];
                xt.frames[f].v[i] = (1.0 - t) * x1 + t * eps;
                target.frames[f].v[i] = eps - x1;
            }
        }

        const Volume v = velocity(current, xt, t, ex.condition);
        double loss = 0.0;
        Volume upstream(data.frame_count(), data.width(), data.height());
        const double inv_n = 1.0 / static_cast<double>(v.element_count());
        for (int f = 0; f < v.frame_count(); ++f) {
            for (std::size_t i = 0; i < v.frames[f].v.size(); ++i) {
                const double d = v.frames[f].v[i] - target.frames[f].v[i];
                loss += d * d * inv_n;
                upstream.frames[f].v[i] = 2.0 * d * inv_n;
            }
        }
        if (!std::isfinite(loss))
            raise(ErrorKind::numerical, "pretrain_flow_matching: loss diverged");

        if (step == 0) result.initial_loss = loss;
        running = running_init ? kEma * running + (1.0 - kEma) * loss : loss;
        running_init = true;
        result.loss_curve.push_back(loss);

        std::fill(grad.begin(), grad.end(), 0.0);
        velocity_vjp(current, xt, t, ex.condition, upstream, grad);
        opt.step(current.params, grad);

        if (running < best) {
            best = running;
            result.model = current;
        }
    }
    result.best_running_loss = best;
    return result;
}

} // namespace planarflow::policy
