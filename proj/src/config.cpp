#include "planarflow/config.hpp"

#include <fstream>
#include <sstream>

#include "planarflow/error.hpp"
#include "planarflow/io.hpp"

namespace planarflow::config {

rewards::RewardStack RunConfig::make_reward_stack() const {
    rewards::RewardStack stack;
    stack.lambda_gen = lambda_gen;
    stack.gen_frames = gen_frames;
    stack.traj_weights.translation = traj_weight_translation;
    stack.traj_weights.rotation = traj_weight_rotation;
    return stack;
}

std::string serialize(const RunConfig& c) {
    std::ostringstream out;
    const auto put = [&](const char* key, const std::string& value) {
        out << key << " = " << value << "\n";
    };
    const auto put_i = [&](const char* key, long long v) { put(key, std::to_string(v)); };
    const auto put_d = [&](const char* key, double v) { put(key, io::format_double(v)); };

    put_i("run.seed", static_cast<long long>(c.seed));
    put("run.corpus", c.corpus_path);
    put("run.out", c.output_directory);
    put_i("run.checkpoint_every", c.setup.checkpoint_every);

    put_i("training.group_size", c.setup.config.group_size);
    put_i("training.groups_per_step", c.setup.config.groups_per_step);
    put_d("training.clip_epsilon", c.setup.config.clip_epsilon);
    put_d("training.kl_beta", c.setup.config.kl_beta);
    put_d("training.learning_rate", c.setup.config.learning_rate);
    put_i("training.decouple_period", c.setup.config.decouple_period);
    put_i("training.dynamic_phase_length", c.setup.config.dynamic_phase_length);
    put_i("training.total_steps", c.setup.config.total_steps);
    put_d("training.kl_ceiling", c.setup.config.kl_ceiling);
    put_i("training.sample_std", c.setup.config.sample_std ? 1 : 0);

    put_i("latent.frames", c.setup.latent_frames);
    put_i("latent.width", c.setup.latent_width);
    put_i("latent.height", c.setup.latent_height);

    put_d("camera.fx", c.setup.intrinsics.fx);
    put_d("camera.fy", c.setup.intrinsics.fy);
    put_d("camera.cx", c.setup.intrinsics.cx);
    put_d("camera.cy", c.setup.intrinsics.cy);
    put_d("camera.z_ref", c.setup.z_ref);

    put_i("schedule.train_steps", c.setup.train_steps_t);
    put_i("schedule.infer_steps", c.infer_steps);
    put_i("schedule.stochastic_steps", c.setup.stochastic_steps);
    put_d("schedule.noise_scale", c.setup.noise_scale);

    put_d("reward.lambda_gen", c.lambda_gen);
    put_d("reward.traj_weight_translation", c.traj_weight_translation);
    put_d("reward.traj_weight_rotation", c.traj_weight_rotation);
    put_i("reward.gen_frames", c.gen_frames);

    put_i("model.patch", c.model_patch);
    put_i("model.hidden1", c.model_hidden1);
    put_i("model.hidden2", c.model_hidden2);

    put_i("pretrain.steps", c.pretrain_steps);
    put_d("pretrain.learning_rate", c.pretrain_learning_rate);
    put_i("pretrain.dataset_size", c.pretrain_dataset_size);

    put_d("world.scene_smoothness", c.setup.scene_smoothness);
    return out.str();
}

RunConfig deserialize(const std::string& text) {
    RunConfig c;
    for (const auto& [key, value] : io::parse_key_values(text)) {
        const auto as_i = [&, v = value] { return std::stoll(v); };
        const auto as_d = [&, v = value] { return std::stod(v); };
        if (key == "run.seed") c.seed = static_cast<std::uint64_t>(as_i());
        else if (key == "run.corpus") c.corpus_path = value;
        else if (key == "run.out") c.output_directory = value;
        else if (key == "run.checkpoint_every") c.setup.checkpoint_every = static_cast<int>(as_i());
        else if (key == "training.group_size") c.setup.config.group_size = static_cast<int>(as_i());
        else if (key == "training.groups_per_step") c.setup.config.groups_per_step = static_cast<int>(as_i());
        else if (key == "training.clip_epsilon") c.setup.config.clip_epsilon = as_d();
        else if (key == "training.kl_beta") c.setup.config.kl_beta = as_d();
        else if (key == "training.learning_rate") c.setup.config.learning_rate = as_d();
        else if (key == "training.decouple_period") c.setup.config.decouple_period = static_cast<int>(as_i());
        else if (key == "training.dynamic_phase_length") c.setup.config.dynamic_phase_length = static_cast<int>(as_i());
        else if (key == "training.total_steps") c.setup.config.total_steps = static_cast<int>(as_i());
        else if (key == "training.kl_ceiling") c.setup.config.kl_ceiling = as_d();
        else if (key == "training.sample_std") c.setup.config.sample_std = as_i() != 0;
        else if (key == "latent.frames") c.setup.latent_frames = static_cast<int>(as_i());
        else if (key == "latent.width") c.setup.latent_width = static_cast<int>(as_i());
        else if (key == "latent.height") c.setup.latent_height = static_cast<int>(as_i());
        else if (key == "camera.fx") c.setup.intrinsics.fx = as_d();
        else if (key == "camera.fy") c.setup.intrinsics.fy = as_d();
        else if (key == "camera.cx") c.setup.intrinsics.cx = as_d();
        else if (key == "camera.cy") c.setup.intrinsics.cy = as_d();
        else if (key == "camera.z_ref") c.setup.z_ref = as_d();
        else if (key == "schedule.train_steps") c.setup.train_steps_t = static_cast<int>(as_i());
        else if (key == "schedule.infer_steps") c.infer_steps = static_cast<int>(as_i());
        else if (key == "schedule.stochastic_steps") c.setup.stochastic_steps = static_cast<int>(as_i());
        else if (key == "schedule.noise_scale") c.setup.noise_scale = as_d();
        else if (key == "reward.lambda_gen") c.lambda_gen = as_d();
        else if (key == "reward.traj_weight_translation") c.traj_weight_translation = as_d();
        else if (key == "reward.traj_weight_rotation") c.traj_weight_rotation = as_d();
        else if (key == "reward.gen_frames") c.gen_frames = static_cast<int>(as_i());
        else if (key == "model.patch") c.model_patch = static_cast<int>(as_i());
        else if (key == "model.hidden1") c.model_hidden1 = static_cast<int>(as_i());
        else if (key == "model.hidden2") c.model_hidden2 = static_cast<int>(as_i());
        else if (key == "pretrain.steps") c.pretrain_steps = static_cast<int>(as_i());
        else if (key == "pretrain.learning_rate") c.pretrain_learning_rate = as_d();
        else if (key == "pretrain.dataset_size") c.pretrain_dataset_size = static_cast<int>(as_i());
        else if (key == "world.scene_smoothness") c.setup.scene_smoothness = as_d();
        else raise(ErrorKind::io, "config: unknown key '" + key + "'");
    }
    c.setup.config.seed = c.seed;
    c.setup.intrinsics = homog::Intrinsics(c.setup.intrinsics.fx, c.setup.intrinsics.fy,
                                           c.setup.intrinsics.cx, c.setup.intrinsics.cy);
    return c;
}

RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::io, "config: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return deserialize(buf.str());
}

void save(const RunConfig& config, const std::string& path) {
    std::ofstream f(path);
    if (!f) raise(ErrorKind::io, "config: cannot open " + path + " for writing");
    f << serialize(config);
}

} // namespace planarflow::config
