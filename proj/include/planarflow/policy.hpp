#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "planarflow/grid.hpp"
#include "planarflow/rng.hpp"
#include "planarflow/se3.hpp"
#include "planarflow/world.hpp"

namespace planarflow::policy {

inline constexpr int kTokenKinds = 11;
inline constexpr int kSceneDescriptorDim = 4;
inline constexpr int kConditionDim = kTokenKinds + 1 + kSceneDescriptorDim;
inline constexpr int kTimeEmbedDim = 3;  // (t, sin 2*pi*t, cos 2*pi*t)

// Structured conditioning: token one-hot block (sums to 1; multi-token
// prompts average their one-hots), the mean magnitude, and a 4-dim scene
// descriptor.
struct Condition {
    std::array<double, kConditionDim> values{};

    static Condition from_tokens(const std::vector<se3::MotionToken>& tokens);
    void set_scene(const world::Scene& scene);
};

std::array<double, kSceneDescriptorDim> scene_descriptor(const world::Scene& scene);

// Per-element velocity field: a two-hidden-layer tanh MLP applied to every
// (patch, t-embedding, condition) with shared weights across patches and
// frames. Parameter count stays ~1e4 so full finite-difference sweeps are
// cheap.
struct VelocityModel {
    int patch = 4;
    int hidden1 = 64;
    int hidden2 = 64;
    std::vector<double> params;

    static VelocityModel create(int patch, int hidden1, int hidden2, Rng& rng);
    static VelocityModel zeros(int patch = 4, int hidden1 = 64, int hidden2 = 64);

    int input_dim() const { return patch * patch + kTimeEmbedDim + kConditionDim; }
    int output_dim() const { return patch * patch; }
    std::size_t parameter_count() const;

    // Offsets into the flat parameter vector.
    std::size_t w1() const { return 0; }
    std::size_t b1() const { return w1() + static_cast<std::size_t>(hidden1) * input_dim(); }
    std::size_t w2() const { return b1() + hidden1; }
    std::size_t b2() const { return w2() + static_cast<std::size_t>(hidden2) * hidden1; }
    std::size_t w3() const { return b2() + hidden2; }
    std::size_t b3() const { return w3() + static_cast<std::size_t>(output_dim()) * hidden2; }
};

// Forward evaluation of v_theta(x, t, c); output has the shape of x.
Volume velocity(const VelocityModel& model, const Volume& x, double t, const Condition& cond);

// Exact reverse-mode gradient of <upstream, v_theta(x, t, c)> with respect to
// the parameters, accumulated into grad (which must be zero-initialized or
// hold a running sum of matching size).
void velocity_vjp(const VelocityModel& model, const Volume& x, double t, const Condition& cond,
                  const Volume& upstream, std::vector<double>& grad);

struct PretrainExample {
    world::Video video;
    Condition condition;
};

struct PretrainResult {
    VelocityModel model;  // snapshot with the lowest running loss
    std::vector<double> loss_curve;
    double initial_loss = 0.0;
    double best_running_loss = 0.0;
};

// Flow-matching regression: v_theta((1-t) x1 + t eps, t, c) toward eps - x1
// with t ~ U(0,1], eps ~ N(0,1). t=1 is pure noise, t=0 is data.
PretrainResult pretrain_flow_matching(const VelocityModel& model,
                                      const std::vector<PretrainExample>& dataset, int steps,
                                      double learning_rate, Rng& rng);

} // namespace planarflow::policy
