#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "planarflow/corpus.hpp"
#include "planarflow/optim.hpp"
#include "planarflow/rewards.hpp"
#include "planarflow/sampler.hpp"

namespace planarflow::grpo {

// Group statistics: advantages are rewards standardized against the group
// (population std; zero when the group is degenerate).
std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       bool sample_std = false);

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
double clipped_surrogate(double ratio, double advantage, double eps);

// Closed-form KL between the current and reference step Gaussians at the
// stored x_from (shared std cancels the variance terms).
double kl_step_penalty(const sampler::VelocityFn& current, const sampler::VelocityFn& reference,
                       const sampler::Transition& transition, double noise_scale,
                       double epsilon_floor = 1e-3);

struct RolloutGroup {
    policy::Condition condition;
    std::vector<sampler::Rollout> members;
    std::vector<rewards::RewardBreakdown> breakdowns;
    std::vector<double> rewards;  // phase-decoupled scalars
    std::vector<double> advantages;
    double noise_scale = 0.7;
    double epsilon_floor = 1e-3;

    int group_size() const { return static_cast<int>(members.size()); }
};

struct TrainingConfig {
    int group_size = 8;
    int groups_per_step = 4;
    double clip_epsilon = 0.2;
    double kl_beta = 0.04;
    double learning_rate = 1e-3;
    int decouple_period = 100;
    int dynamic_phase_length = 10;
    int total_steps = 300;
    double kl_ceiling = 200.0;  // divergence detector on mean per-step KL
    bool sample_std = false;
    std::uint64_t seed = 0;

    void validate() const;
};

// Steps are 1-based: `period` full steps, then `dynamic_phase_length` dynamic
// ones, repeating.
rewards::TrainingPhase phase_for_step(int step, const TrainingConfig& config);

struct StepDiagnostics {
    double objective = 0.0;
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;
    double mean_kl = 0.0;
    double mean_reward = 0.0;
    int stochastic_transitions = 0;
};

// Objective value of Eq-style clipped surrogate minus beta * KL, averaged per
// member over its stochastic transitions only.
StepDiagnostics grpo_objective(const policy::VelocityModel& model,
                               const std::vector<RolloutGroup>& groups,
                               const policy::VelocityModel& reference,
                               const TrainingConfig& config);

// Exact gradient of grpo_objective with respect to the model parameters.
std::vector<double> grpo_gradient(const policy::VelocityModel& model,
                                  const std::vector<RolloutGroup>& groups,
                                  const policy::VelocityModel& reference,
                                  const TrainingConfig& config);

// One ascent step on the objective; diagnostics reflect the pre-update model.
StepDiagnostics grpo_update(policy::VelocityModel& model,
                            const std::vector<RolloutGroup>& groups,
                            const policy::VelocityModel& reference,
                            const TrainingConfig& config, Adam& optimizer);

// Full-run wiring: latent geometry, rollout schedule and reward stack.
struct TrainSetup {
    TrainingConfig config;
    int latent_frames = 8;
    int latent_width = 16;
    int latent_height = 16;
    homog::Intrinsics intrinsics = homog::Intrinsics::centered(16, 16);
    double z_ref = 5.0;
    int train_steps_t = 10;        // denoising steps during training rollouts
    int stochastic_steps = 4;      // stochastic subset size per rollout
    double noise_scale = 0.7;
    double scene_smoothness = 0.8;
    int checkpoint_every = 100;
};

struct StepRecord {
    int step = 0;
    rewards::TrainingPhase phase = rewards::TrainingPhase::full;
    double mean_reward = 0.0;
    double mean_s_meta = 0.0;
    double mean_s_recon = 0.0;
    double mean_s_traj = 0.0;
    double mean_r_gen = 0.0;
    double mean_kl = 0.0;
    double clip_fraction = 0.0;
    double mean_ratio = 0.0;
};

struct TrainingRun {
    policy::VelocityModel model;
    std::vector<StepRecord> log;
};

// Called after every step; gives the CLI archive writer access to rollouts of
// the first and last steps without coupling the trainer to the file layout.
using StepCallback =
    std::function<void(const StepRecord&, const std::vector<RolloutGroup>&,
                       const policy::VelocityModel&)>;

// The training loop: phase selection, condition sampling, trajectory
// synthesis, noise warping, group rollouts, decoupled scoring, advantage
// normalization and the policy update.
TrainingRun run_training(const policy::VelocityModel& reference, const corpus::Corpus& corpus,
                         const TrainSetup& setup, rewards::RewardStack& stack, Rng& rng,
                         const StepCallback& on_step = nullptr);

// Deterministic scene identity for a prompt (conditions the policy).
world::Scene scene_for_prompt(const std::string& prompt, double smoothness, double z_ref);

} // namespace planarflow::grpo
