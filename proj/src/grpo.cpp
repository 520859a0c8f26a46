#include "planarflow/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "planarflow/error.hpp"
#include "planarflow/noise.hpp"

namespace planarflow::grpo {

std::vector<double> compute_advantages(const std::vector<double>& rewards, bool sample_std) {
    const std::size_t g = rewards.size();
    if (g < 2)
        raise(ErrorKind::insufficient_data, "compute_advantages: group size must be >= 2");

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(sample_std ? g - 1 : g);
    const double std_dev = std::sqrt(var);

    std::vector<double> adv(g, 0.0);
    if (std_dev < 1e-8) return adv;  // degenerate group
    for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / std_dev;
    return adv;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
    if (!(ratio > 0.0))
        raise(ErrorKind::domain, "clipped_surrogate: ratio must be positive");
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

double kl_step_penalty(const sampler::VelocityFn& current, const sampler::VelocityFn& reference,
                       const sampler::Transition& transition, double noise_scale,
                       double epsilon_floor) {
    if (!transition.is_stochastic)
        raise(ErrorKind::invalid_argument,
              "kl_step_penalty: deterministic transition is not a policy step");
    const Volume mean_cur = sampler::sde_mean(current, transition.x_from, transition.t_from,
                                              transition.dt, noise_scale, epsilon_floor);
    const Volume mean_ref = sampler::sde_mean(reference, transition.x_from, transition.t_from,
                                              transition.dt, noise_scale, epsilon_floor);
    const double inv_two_var = 0.5 / (transition.std_dev * transition.std_dev);
    double kl = 0.0;
    for (int f = 0; f < mean_cur.frame_count(); ++f)
        for (std::size_t i = 0; i < mean_cur.frames[f].v.size(); ++i) {
            const double d = mean_cur.frames[f].v[i] - mean_ref.frames[f].v[i];
            kl += d * d * inv_two_var;
        }
    return kl;
}

void TrainingConfig::validate() const {
    if (group_size < 2)
        raise(ErrorKind::invalid_argument, "TrainingConfig: group_size must be >= 2");
    if (groups_per_step < 1 || total_steps < 0 || decouple_period < 1 ||
        dynamic_phase_length < 0)
        raise(ErrorKind::invalid_argument, "TrainingConfig: counts must be positive");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
        raise(ErrorKind::invalid_argument, "TrainingConfig: clip epsilon must lie in (0,1)");
    if (kl_beta < 0.0 || learning_rate < 0.0)
        raise(ErrorKind::invalid_argument, "TrainingConfig: beta and lr must be nonnegative");
}

rewards::TrainingPhase phase_for_step(int step, const TrainingConfig& config) {
    const int cycle = config.decouple_period + config.dynamic_phase_length;
    const int pos = (step - 1) % cycle;
    return pos < config.decouple_period ? rewards::TrainingPhase::full
                                        : rewards::TrainingPhase::dynamic;
}

namespace {

struct TransitionEval {
    const sampler::Transition* tr;
    const policy::Condition* condition;
    double advantage;
    double weight;  // 1 / (member stochastic count * member count)
    double ratio;
    bool clip_active;
    double kl;
    Volume mean_cur;
    Volume mean_ref;
};

// Shared recomputation for objective, diagnostics and gradient.
std::vector<TransitionEval> evaluate_transitions(const policy::VelocityModel& model,
                                                 const std::vector<RolloutGroup>& groups,
                                                 const policy::VelocityModel& reference,
                                                 const TrainingConfig& config) {
    std::vector<TransitionEval> evals;
    int member_count = 0;
    for (const RolloutGroup& g : groups) member_count += g.group_size();
    if (member_count == 0)
        raise(ErrorKind::insufficient_data, "grpo: no rollouts");

    for (const RolloutGroup& g : groups) {
        if (g.group_size() < 2)
            raise(ErrorKind::insufficient_data, "grpo: group size must be >= 2");
        if (g.advantages.size() != g.members.size())
            raise(ErrorKind::shape_mismatch, "grpo: advantages not computed");
        const sampler::VelocityFn cur = sampler::bind_model(model, g.condition);
        const sampler::VelocityFn ref = sampler::bind_model(reference, g.condition);
        for (std::size_t m = 0; m < g.members.size(); ++m) {
            int stochastic = 0;
            for (const sampler::Transition& tr : g.members[m].transitions)
                if (tr.is_stochastic) ++stochastic;
            if (stochastic == 0) continue;
            const double weight = 1.0 / (static_cast<double>(stochastic) * member_count);
            for (const sampler::Transition& tr : g.members[m].transitions) {
                if (!tr.is_stochastic) continue;
                TransitionEval ev;
                ev.tr = &tr;
                ev.condition = &g.condition;
                ev.advantage = g.advantages[m];
                ev.weight = weight;
                ev.mean_cur = sampler::sde_mean(cur, tr.x_from, tr.t_from, tr.dt, g.noise_scale,
                                                g.epsilon_floor);
                ev.mean_ref = sampler::sde_mean(ref, tr.x_from, tr.t_from, tr.dt, g.noise_scale,
                                                g.epsilon_floor);
                const double lp_cur =
                    sampler::gaussian_log_prob(tr.x_to, ev.mean_cur, tr.std_dev);
                ev.ratio = std::exp(lp_cur - tr.log_prob);
                ev.clip_active = std::abs(ev.ratio - 1.0) > config.clip_epsilon;

                const double inv_two_var = 0.5 / (tr.std_dev * tr.std_dev);
                double kl = 0.0;
                for (int f = 0; f < ev.mean_cur.frame_count(); ++f)
                    for (std::size_t i = 0; i < ev.mean_cur.frames[f].v.size(); ++i) {
                        const double d =
                            ev.mean_cur.frames[f].v[i] - ev.mean_ref.frames[f].v[i];
                        kl += d * d * inv_two_var;
                    }
                ev.kl = kl;
                evals.push_back(std::move(ev));
            }
        }
    }
    if (evals.empty())
        raise(ErrorKind::insufficient_data, "grpo: nothing to learn, no stochastic transitions");
    return evals;
}

double mean_group_reward(const std::vector<RolloutGroup>& groups) {
    double sum = 0.0;
    int n = 0;
    for (const RolloutGroup& g : groups)
        for (double r : g.rewards) {
            sum += r;
            ++n;
        }
    return n > 0 ? sum / n : 0.0;
}

} // namespace

StepDiagnostics grpo_objective(const policy::VelocityModel& model,
                               const std::vector<RolloutGroup>& groups,
                               const policy::VelocityModel& reference,
                               const TrainingConfig& config) {
    config.validate();
    const auto evals = evaluate_transitions(model, groups, reference, config);

    StepDiagnostics d;
    d.stochastic_transitions = static_cast<int>(evals.size());
    for (const TransitionEval& ev : evals) {
        d.objective +=
            ev.weight *
            (clipped_surrogate(ev.ratio, ev.advantage, config.clip_epsilon) -
             config.kl_beta * ev.kl);
        d.mean_ratio += ev.ratio;
        d.clip_fraction += ev.clip_active ? 1.0 : 0.0;
        d.mean_kl += ev.kl;
    }
    d.mean_ratio /= static_cast<double>(evals.size());
    d.clip_fraction /= static_cast<double>(evals.size());
    d.mean_kl /= static_cast<double>(evals.size());
    d.mean_reward = mean_group_reward(groups);
    return d;
}

std::vector<double> grpo_gradient(const policy::VelocityModel& model,
                                  const std::vector<RolloutGroup>& groups,
                                  const policy::VelocityModel& reference,
                                  const TrainingConfig& config) {
    config.validate();
    const auto evals = evaluate_transitions(model, groups, reference, config);

    std::vector<double> grad(model.parameter_count(), 0.0);
    for (const TransitionEval& ev : evals) {
        const sampler::Transition& tr = *ev.tr;
        const double coeff = sampler::mean_velocity_coefficient(
            tr.t_from, tr.dt, groups.front().noise_scale, groups.front().epsilon_floor);
        const double inv_var = 1.0 / (tr.std_dev * tr.std_dev);

        // d L_clip / d theta: active only when the unclipped branch is the
        // minimum; there d/dtheta (ratio * A) = A * ratio * dlogp/dtheta.
        const double unclipped = ev.ratio * ev.advantage;
        const double clipped =
            std::clamp(ev.ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon) *
            ev.advantage;
        const double surrogate_scale =
            (unclipped <= clipped) ? ev.advantage * ev.ratio : 0.0;

        // Combined upstream on the velocity output:
        //   surrogate: weight * surrogate_scale * (x_to - mean_cur) / var * coeff
        //   KL:       -beta * weight * (mean_cur - mean_ref) / var * coeff
        Volume upstream(tr.x_from.frame_count(), tr.x_from.width(), tr.x_from.height());
        for (int f = 0; f < upstream.frame_count(); ++f)
            for (std::size_t i = 0; i < upstream.frames[f].v.size(); ++i) {
                const double resid = tr.x_to.frames[f].v[i] - ev.mean_cur.frames[f].v[i];
                const double drift = ev.mean_cur.frames[f].v[i] - ev.mean_ref.frames[f].v[i];
                upstream.frames[f].v[i] =
                    ev.weight * coeff * inv_var *
                    (surrogate_scale * resid - config.kl_beta * drift);
            }
        policy::velocity_vjp(model, tr.x_from, tr.t_from, *ev.condition, upstream, grad);
    }
    return grad;
}

StepDiagnostics grpo_update(policy::VelocityModel& model,
                            const std::vector<RolloutGroup>& groups,
                            const policy::VelocityModel& reference,
                            const TrainingConfig& config, Adam& optimizer) {
    const StepDiagnostics d = grpo_objective(model, groups, reference, config);
    const std::vector<double> grad = grpo_gradient(model, groups, reference, config);
    optimizer.step(model.params, grad);
    return d;
}

world::Scene scene_for_prompt(const std::string& prompt, double smoothness, double z_ref) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : prompt) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return world::generate_scene(h, smoothness, 192, 192, z_ref);
}

TrainingRun run_training(const policy::VelocityModel& reference, const corpus::Corpus& corpus_,
                         const TrainSetup& setup, rewards::RewardStack& stack, Rng& rng,
                         const StepCallback& on_step) {
    setup.config.validate();
    if (corpus_.pool_indices(false).empty())
        raise(ErrorKind::insufficient_data, "run_training: empty corpus");
    if (setup.config.dynamic_phase_length > 0 && corpus_.pool_indices(true).empty())
        raise(ErrorKind::insufficient_data,
              "run_training: decoupled training needs a dynamic subset");
    if (setup.latent_frames < 2)
        raise(ErrorKind::invalid_argument, "run_training: need at least 2 latent frames");

    TrainingRun run;
    run.model = reference;
    Adam optimizer(setup.config.learning_rate, /*maximize=*/true);

    for (int step = 1; step <= setup.config.total_steps; ++step) {
        const rewards::TrainingPhase phase = phase_for_step(step, setup.config);
        const bool full = phase == rewards::TrainingPhase::full;
        Rng step_rng = rng.derive(0x57e9, static_cast<std::uint64_t>(step));

        Rng batch_rng = step_rng.derive(1);
        const auto batch =
            corpus::sample_batch(corpus_, full ? corpus::Pool::full : corpus::Pool::dynamic,
                                 setup.config.groups_per_step, batch_rng);

        // One stochastic-step pattern per training step.
        Rng sched_rng = step_rng.derive(2);
        const sampler::SamplingSchedule schedule = sampler::SamplingSchedule::training(
            setup.train_steps_t, setup.noise_scale, setup.stochastic_steps, sched_rng);

        std::vector<RolloutGroup> groups;
        groups.reserve(batch.size());
        for (std::size_t gi = 0; gi < batch.size(); ++gi) {
            const corpus::PromptEntry& entry = batch[gi];
            const world::Scene scene =
                scene_for_prompt(entry.prompt, setup.scene_smoothness, setup.z_ref);

            std::vector<se3::MotionToken> tokens;
            const se3::MotionDefaults defaults = se3::MotionDefaults::for_depth(setup.z_ref);
            for (se3::MotionKind k : entry.camera_kinds()) tokens.push_back(defaults.token(k));
            const se3::Trajectory target =
                se3::synthesize_trajectory(tokens, setup.latent_frames - 1, setup.z_ref);

            RolloutGroup group;
            group.noise_scale = setup.noise_scale;
            group.epsilon_floor = schedule.epsilon_floor;
            group.condition = policy::Condition::from_tokens(tokens);
            group.condition.set_scene(scene);
            const sampler::VelocityFn vfn = sampler::bind_model(run.model, group.condition);

            for (int m = 0; m < setup.config.group_size; ++m) {
                Rng member_rng = step_rng.derive(3 + gi, static_cast<std::uint64_t>(m));
                Rng noise_rng = member_rng.derive(0);
                const noise::NoiseGrid initial = noise::sample_noise_grid(
                    setup.latent_width, setup.latent_height, 1, noise_rng);
                const noise::NoiseVolume warped = noise::warp_noise_volume(
                    initial, target, setup.intrinsics, setup.z_ref, member_rng.derive(1));
                Rng rollout_rng = member_rng.derive(2);
                sampler::Rollout rollout = sampler::sample_rollout(
                    vfn, sampler::latent_from_noise(warped), schedule, rollout_rng);

                const rewards::ScoredVideo scored =
                    rewards::score_video(rollout.video, entry.prompt, target, setup.intrinsics,
                                         setup.z_ref, stack, full);
                group.breakdowns.push_back(scored.breakdown);
                group.rewards.push_back(rewards::decoupled_reward(scored.breakdown, phase));
                group.members.push_back(std::move(rollout));
            }
            group.advantages = compute_advantages(group.rewards, setup.config.sample_std);
            groups.push_back(std::move(group));
        }

        const StepDiagnostics diag =
            grpo_update(run.model, groups, reference, setup.config, optimizer);
        if (diag.mean_kl > setup.config.kl_ceiling)
            raise(ErrorKind::numerical, "run_training: KL diverged past the configured ceiling");

        StepRecord rec;
        rec.step = step;
        rec.phase = phase;
        rec.mean_reward = diag.mean_reward;
        rec.mean_kl = diag.mean_kl;
        rec.clip_fraction = diag.clip_fraction;
        rec.mean_ratio = diag.mean_ratio;
        int n = 0;
        for (const RolloutGroup& g : groups)
            for (const rewards::RewardBreakdown& b : g.breakdowns) {
                rec.mean_s_meta += b.s_meta;
                rec.mean_s_recon += b.s_recon;
                rec.mean_s_traj += b.s_traj;
                rec.mean_r_gen += b.r_gen;
                ++n;
            }
        if (n > 0) {
            rec.mean_s_meta /= n;
            rec.mean_s_recon /= n;
            rec.mean_s_traj /= n;
            rec.mean_r_gen /= n;
        }
        run.log.push_back(rec);
        if (on_step) on_step(rec, groups, run.model);
    }
    return run;
}

} // namespace planarflow::grpo
