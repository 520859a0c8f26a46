#pragma once

#include <string>

#include "planarflow/grpo.hpp"

namespace planarflow::config {

// Everything a run needs, serializable as flat dotted key = value text.
struct RunConfig {
    grpo::TrainSetup setup;
    int infer_steps = 40;
    int model_patch = 4;
    int model_hidden1 = 64;
    int model_hidden2 = 64;
    int pretrain_steps = 1500;
    double pretrain_learning_rate = 3e-3;
    int pretrain_dataset_size = 16;
    double lambda_gen = 1.0;
    double traj_weight_translation = 1.0;
    double traj_weight_rotation = 1.0;
    int gen_frames = 0;  // 0: all frames
    std::string corpus_path;
    std::string output_directory;
    std::uint64_t seed = 0;

    rewards::RewardStack make_reward_stack() const;
};

std::string serialize(const RunConfig& config);
RunConfig deserialize(const std::string& text);
RunConfig load(const std::string& path);
void save(const RunConfig& config, const std::string& path);

} // namespace planarflow::config
