#pragma once

#include <string>
#include <vector>

#include "planarflow/grid.hpp"
#include "planarflow/homography.hpp"
#include "planarflow/noise.hpp"
#include "planarflow/policy.hpp"
#include "planarflow/sampler.hpp"
#include "planarflow/se3.hpp"

namespace planarflow::io {

// All binary layouts are little-endian: u32 header fields, float32 planes
// (parameters are float64). Grids are row-major.

// [w][h][u-plane][v-plane]
void write_flow(const std::string& path, const homog::FlowField& flow);
homog::FlowField read_flow(const std::string& path);

// [frames][w][h][channels][per frame: channel planes]
void write_noise_volume(const std::string& path, const noise::NoiseVolume& volume);
noise::NoiseVolume read_noise_volume(const std::string& path);

// [frames][w][h][frame planes]
void write_volume(const std::string& path, const Volume& volume);
Volume read_volume(const std::string& path);

// 8-bit binary PGM per frame: frame_0000.pgm, ...
void write_video_pgm(const std::string& directory, const Volume& video);

// "PFCK" magic, format version, architecture dims, then float64 parameters.
void write_checkpoint(const std::string& path, const policy::VelocityModel& model);
policy::VelocityModel read_checkpoint(const std::string& path);

// CSV: one row per pose, "frame,r00..r22,t0,t1,t2"; segment annotations go in
// leading comment lines.
void write_trajectory_csv(const std::string& path, const se3::Trajectory& trajectory,
                          const std::vector<std::string>& annotations = {});
se3::Trajectory read_trajectory_csv(const std::string& path);

// Transition records (x_from, x_to, step, log_prob, stochastic flag) for
// replay and audit.
void write_rollout(const std::string& path, const sampler::Rollout& rollout);
sampler::Rollout read_rollout(const std::string& path);

void ensure_directory(const std::string& path);

// Flat key = value configuration text with dotted sections; '#' comments.
// Values keep full double precision so snapshots round-trip losslessly.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);
std::string format_double(double v);

} // namespace planarflow::io
