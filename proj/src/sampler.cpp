#include "planarflow/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "planarflow/error.hpp"

namespace planarflow::sampler {

VelocityFn bind_model(const policy::VelocityModel& model, const policy::Condition& cond) {
    return [&model, cond](const Volume& x, double t) {
        return policy::velocity(model, x, t, cond);
    };
}

double sigma(double t, double noise_scale, double epsilon_floor) {
    if (!(t > 0.0 && t < 1.0))
        raise(ErrorKind::domain, "sigma: t must lie in (0, 1)");
    const double tc = std::min(t, 1.0 - epsilon_floor);
    return noise_scale * std::sqrt(tc / (1.0 - tc));
}

bool SamplingSchedule::is_stochastic(int step) const {
    return std::binary_search(stochastic_steps.begin(), stochastic_steps.end(), step);
}

void SamplingSchedule::validate() const {
    if (timesteps.size() < 2)
        raise(ErrorKind::invalid_argument, "SamplingSchedule: need at least one step");
    for (std::size_t i = 0; i + 1 < timesteps.size(); ++i)
        if (!(timesteps[i] > timesteps[i + 1]))
            raise(ErrorKind::invalid_argument, "SamplingSchedule: timesteps must decrease");
    if (timesteps.front() > 1.0 || timesteps.back() < epsilon_floor - 1e-15)
        raise(ErrorKind::invalid_argument, "SamplingSchedule: timesteps outside [floor, 1]");
    for (std::size_t i = 0; i + 1 < stochastic_steps.size(); ++i)
        if (stochastic_steps[i] >= stochastic_steps[i + 1])
            raise(ErrorKind::invalid_argument, "SamplingSchedule: stochastic steps unsorted");
    if (!stochastic_steps.empty() &&
        (stochastic_steps.front() < 0 || stochastic_steps.back() >= step_count() - 1))
        raise(ErrorKind::invalid_argument,
              "SamplingSchedule: stochastic steps must leave the final step deterministic");
}

SamplingSchedule SamplingSchedule::deterministic(int steps, double epsilon_floor) {
    if (steps < 1)
        raise(ErrorKind::invalid_argument, "SamplingSchedule: steps must be positive");
    SamplingSchedule s;
    s.epsilon_floor = epsilon_floor;
    s.noise_scale = 0.0;
    s.timesteps.resize(steps + 1);
    for (int k = 0; k <= steps; ++k)
        s.timesteps[k] = 1.0 - (1.0 - epsilon_floor) * k / steps;
    s.timesteps.back() = epsilon_floor;
    return s;
}

SamplingSchedule SamplingSchedule::training(int steps, double noise_scale, int stochastic_count,
                                            Rng& rng, double epsilon_floor) {
    SamplingSchedule s = deterministic(steps, epsilon_floor);
    s.noise_scale = noise_scale;
    // Intermediate steps only: the first step sits at t = 1 where sigma is
    // clamped and huge, the last must reach the floor deterministically.
    std::vector<int> eligible;
    for (int k = 1; k + 1 < steps; ++k) eligible.push_back(k);
    if (stochastic_count > static_cast<int>(eligible.size()))
        raise(ErrorKind::invalid_argument,
              "SamplingSchedule: more stochastic steps than intermediate steps");
    for (int i = 0; i < stochastic_count; ++i) {
        const std::uint64_t j =
            i + rng.uniform_index(static_cast<std::uint64_t>(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    s.stochastic_steps.assign(eligible.begin(), eligible.begin() + stochastic_count);
    std::sort(s.stochastic_steps.begin(), s.stochastic_steps.end());
    s.validate();
    return s;
}

namespace {

void check_step_args(const Volume& x, double t, double dt, double epsilon_floor) {
    if (x.frame_count() == 0)
        raise(ErrorKind::shape_mismatch, "sampler: empty state");
    if (!(dt < 0.0))
        raise(ErrorKind::domain, "sampler: dt must be negative (time flows toward data)");
    if (!(t > epsilon_floor))
        raise(ErrorKind::domain, "sampler: t at or below the epsilon floor");
    if (t > 1.0)
        raise(ErrorKind::domain, "sampler: t above 1");
}

} // namespace

Volume ode_step(const VelocityFn& v, const Volume& x, double t, double dt) {
    if (!(dt < 0.0))
        raise(ErrorKind::domain, "ode_step: dt must be negative");
    const Volume vel = v(x, t);
    Volume out = x;
    for (int f = 0; f < out.frame_count(); ++f)
        for (std::size_t i = 0; i < out.frames[f].v.size(); ++i)
            out.frames[f].v[i] += vel.frames[f].v[i] * dt;
    return out;
}

Volume sde_mean(const VelocityFn& v, const Volume& x, double t, double dt, double noise_scale,
                double epsilon_floor) {
    check_step_args(x, t, dt, epsilon_floor);
    const double sig = (noise_scale == 0.0)
                           ? 0.0
                           : sigma(std::min(t, 1.0 - epsilon_floor), noise_scale, epsilon_floor);
    const double correction = sig * sig / (2.0 * t);
    const Volume vel = v(x, t);
    Volume mean = x;
    for (int f = 0; f < mean.frame_count(); ++f)
        for (std::size_t i = 0; i < mean.frames[f].v.size(); ++i) {
            const double xv = x.frames[f].v[i];
            const double vv = vel.frames[f].v[i];
            mean.frames[f].v[i] = xv + (vv + correction * (xv + (1.0 - t) * vv)) * dt;
        }
    return mean;
}

double mean_velocity_coefficient(double t, double dt, double noise_scale,
                                 double epsilon_floor) {
    const double sig = (noise_scale == 0.0)
                           ? 0.0
                           : sigma(std::min(t, 1.0 - epsilon_floor), noise_scale, epsilon_floor);
    return (1.0 + sig * sig / (2.0 * t) * (1.0 - t)) * dt;
}

double gaussian_log_prob(const Volume& x, const Volume& mean, double std_dev) {
    if (!(std_dev > 0.0))
        raise(ErrorKind::domain, "gaussian_log_prob: std must be positive");
    constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
    const double inv_var = 1.0 / (std_dev * std_dev);
    double lp = 0.0;
    std::size_t n = 0;
    for (int f = 0; f < x.frame_count(); ++f) {
        for (std::size_t i = 0; i < x.frames[f].v.size(); ++i) {
            const double d = x.frames[f].v[i] - mean.frames[f].v[i];
            lp += -0.5 * d * d * inv_var;
            ++n;
        }
    }
    return lp - static_cast<double>(n) * (std::log(std_dev) + kLogSqrt2Pi);
}

Transition sde_step(const VelocityFn& v, const Volume& x, double t, double dt,
                    double noise_scale, Rng& rng, double epsilon_floor) {
    check_step_args(x, t, dt, epsilon_floor);

    Transition tr;
    tr.x_from = x;
    tr.t_from = t;
    tr.dt = dt;
    tr.mean = sde_mean(v, x, t, dt, noise_scale, epsilon_floor);
    if (noise_scale == 0.0) {
        tr.x_to = tr.mean;
        tr.is_stochastic = false;
        return tr;
    }

    tr.std_dev =
        sigma(std::min(t, 1.0 - epsilon_floor), noise_scale, epsilon_floor) * std::sqrt(-dt);
    tr.x_to = tr.mean;
    for (int f = 0; f < tr.x_to.frame_count(); ++f)
        for (double& xv : tr.x_to.frames[f].v) xv += tr.std_dev * rng.normal();
    tr.log_prob = gaussian_log_prob(tr.x_to, tr.mean, tr.std_dev);
    tr.is_stochastic = true;
    return tr;
}

Volume apply_squash(const Volume& latent, const SquashMap& squash) {
    Volume out = latent;
    for (int f = 0; f < out.frame_count(); ++f)
        for (double& x : out.frames[f].v) x = squash(x);
    return out;
}

Volume latent_from_noise(const noise::NoiseVolume& volume, int channel) {
    if (volume.frame_count() == 0)
        raise(ErrorKind::insufficient_data, "latent_from_noise: empty noise volume");
    Volume out;
    out.frames.reserve(volume.frames.size());
    for (const noise::NoiseGrid& g : volume.frames) {
        if (channel < 0 || channel >= g.channels)
            raise(ErrorKind::invalid_argument, "latent_from_noise: channel out of range");
        Grid frame(g.width, g.height);
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) frame.at(x, y) = g.at(x, y, channel);
        out.frames.push_back(std::move(frame));
    }
    return out;
}

Rollout sample_rollout(const VelocityFn& v, const Volume& initial_noise,
                       const SamplingSchedule& schedule, Rng& rng) {
    schedule.validate();

    Rollout rollout;
    Volume x = initial_noise;
    for (int k = 0; k < schedule.step_count(); ++k) {
        const double t = schedule.timesteps[k];
        const double dt = schedule.timesteps[k + 1] - schedule.timesteps[k];
        Transition tr;
        if (schedule.is_stochastic(k)) {
            tr = sde_step(v, x, t, dt, schedule.noise_scale, rng, schedule.epsilon_floor);
        } else {
            tr.x_from = x;
            tr.t_from = t;
            tr.dt = dt;
            tr.x_to = ode_step(v, x, t, dt);
            tr.mean = tr.x_to;
            tr.is_stochastic = false;
        }
        tr.step = k;
        x = tr.x_to;
        rollout.transitions.push_back(std::move(tr));
    }
    rollout.final_latent = x;
    rollout.video = apply_squash(x, rollout.squash);
    return rollout;
}

double transition_log_prob(const VelocityFn& v, const Transition& transition,
                           double noise_scale, double epsilon_floor) {
    if (!transition.is_stochastic)
        raise(ErrorKind::invalid_argument,
              "transition_log_prob: deterministic transition is not a policy step");
    const Volume mean = sde_mean(v, transition.x_from, transition.t_from, transition.dt,
                                 noise_scale, epsilon_floor);
    return gaussian_log_prob(transition.x_to, mean, transition.std_dev);
}

} // namespace planarflow::sampler
