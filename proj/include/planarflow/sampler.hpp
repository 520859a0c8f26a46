#pragma once

#include <functional>
#include <vector>

#include "planarflow/grid.hpp"
#include "planarflow/noise.hpp"
#include "planarflow/policy.hpp"
#include "planarflow/rng.hpp"

namespace planarflow::sampler {

// Velocity source for the integrators; tests substitute analytic fields.
using VelocityFn = std::function<Volume(const Volume& x, double t)>;

VelocityFn bind_model(const policy::VelocityModel& model, const policy::Condition& cond);

// sigma(t) = a * sqrt(t / (1 - t)), evaluated at min(t, 1 - epsilon_floor).
// The form under which the drift-corrected SDE preserves rectified-flow
// marginals; t must lie in (0, 1).
double sigma(double t, double noise_scale, double epsilon_floor = 1e-3);

// Decreasing time grid t_0 = 1 > ... > t_T = epsilon_floor with the subset of
// step indices that sample stochastically. The final step is always
// deterministic so nothing evaluates at the floor.
struct SamplingSchedule {
    std::vector<double> timesteps;
    double noise_scale = 0.7;
    std::vector<int> stochastic_steps;  // sorted, subset of {0..T-2}
    double epsilon_floor = 1e-3;

    int step_count() const { return static_cast<int>(timesteps.size()) - 1; }
    bool is_stochastic(int step) const;
    void validate() const;

    // Uniform grid, fully deterministic (inference).
    static SamplingSchedule deterministic(int steps, double epsilon_floor = 1e-3);
    // Uniform grid with `stochastic_count` randomly selected intermediate
    // stochastic steps (never the first or last step).
    static SamplingSchedule training(int steps, double noise_scale, int stochastic_count,
                                     Rng& rng, double epsilon_floor = 1e-3);
};

// One denoising update. Deterministic transitions store the ODE result and
// carry no log-probability.
struct Transition {
    Volume x_from;
    Volume x_to;
    Volume mean;
    int step = 0;
    double t_from = 0.0;
    double dt = 0.0;
    double std_dev = 0.0;
    double log_prob = 0.0;
    bool is_stochastic = false;
};

// Plain Euler step of the flow ODE: x += v * dt (dt < 0).
Volume ode_step(const VelocityFn& v, const Volume& x, double t, double dt);

// Drift-corrected mean of the stochastic update rule.
Volume sde_mean(const VelocityFn& v, const Volume& x, double t, double dt, double noise_scale,
                double epsilon_floor = 1e-3);

// d(mean)/d(velocity): the scalar that routes log-prob gradients into the
// velocity VJP.
double mean_velocity_coefficient(double t, double dt, double noise_scale,
                                 double epsilon_floor = 1e-3);

// Elementwise Gaussian log-density of x under (mean, std), summed.
double gaussian_log_prob(const Volume& x, const Volume& mean, double std_dev);

// Stochastic policy step; with noise_scale == 0 the result degenerates to the
// ODE update and is flagged deterministic.
Transition sde_step(const VelocityFn& v, const Volume& x, double t, double dt,
                    double noise_scale, Rng& rng, double epsilon_floor = 1e-3);

// Fixed logistic squashing map used to move final latents into [0,1] for
// reward evaluation; recorded per rollout.
struct SquashMap {
    double gain = 4.0;
    double center = 0.5;

    double operator()(double x) const { return 1.0 / (1.0 + std::exp(-gain * (x - center))); }
};

struct Rollout {
    Volume final_latent;
    Volume video;  // squash applied
    std::vector<Transition> transitions;
    SquashMap squash;
};

Volume apply_squash(const Volume& latent, const SquashMap& squash);

// Converts a (single-channel) warped noise volume into the rollout's initial
// latent.
Volume latent_from_noise(const noise::NoiseVolume& volume, int channel = 0);

// ODE steps outside schedule.stochastic_steps, SDE steps inside; only the
// stochastic transitions carry log-probabilities.
Rollout sample_rollout(const VelocityFn& v, const Volume& initial_noise,
                       const SamplingSchedule& schedule, Rng& rng);

// Log-density of the stored stochastic transition under the current velocity
// field; equals the stored value when the parameters are unchanged.
double transition_log_prob(const VelocityFn& v, const Transition& transition,
                           double noise_scale, double epsilon_floor = 1e-3);

} // namespace planarflow::sampler
