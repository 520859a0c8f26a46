#pragma once

#include <memory>
#include <string>

#include "planarflow/metrics.hpp"
#include "planarflow/world.hpp"

namespace planarflow::rewards {

// Composite reward components. r_3d = s_meta + s_recon + s_traj in [0,3],
// r_gen in [-1,1], total = r_3d + lambda_gen * r_gen.
struct RewardBreakdown {
    double s_meta = 0.0;
    double s_recon = 0.0;
    double s_traj = 0.0;
    double r_3d = 0.0;
    double r_gen = 0.0;
    double total = 0.0;
    double lambda_gen = 1.0;
};

// Scores a rendered meta view against the prompt on the 0..9 rubric.
class CriticInterface {
public:
    virtual ~CriticInterface() = default;
    virtual int score(const Grid& meta_view, const std::string& prompt) = 0;
};

// Per-frame aesthetic score in [-1,1] (clamped at this boundary).
class AestheticInterface {
public:
    virtual ~AestheticInterface() = default;
    virtual double score(const Grid& frame) = 0;
};

struct TrajWeights {
    double translation = 1.0;
    double rotation = 1.0;
};

// exp(-(w_t * D_trans + w_r * D_rot)) with D_trans normalized by the target
// path length (floor-guarded) and D_rot the mean geodesic rotation distance.
double traj_alignment_score(const se3::Trajectory& target, const se3::Trajectory& estimated,
                            const TrajWeights& weights = {});

// 1 minus the toy perceptual distance; windowed local-statistics similarity
// restricted to interior pixels when a mask is given.
double recon_fidelity_score(const world::Video& video, const world::Video& rerendered,
                            const std::vector<std::vector<std::uint8_t>>& interior = {});

// Meta view: frame-0 camera pulled back 2 * z_ref along its optical axis and
// yawed 20 degrees; the canonical reconstruction is rendered from there and
// judged by the critic, scaled by 0.1.
double meta_view_score(const world::Rerendered& reconstruction, CriticInterface& critic,
                       const std::string& prompt, const homog::Intrinsics& K, double z_ref);

se3::Pose meta_view_pose(double z_ref);

// Mean aesthetic over the first k frames, in [-1,1].
double general_reward(const world::Video& video, AestheticInterface& aesthetic, int k);

// Assembles the breakdown with exact sums; components outside their declared
// ranges raise rather than clamp.
RewardBreakdown composite_reward(double s_meta, double s_recon, double s_traj, double r_gen,
                                 double lambda_gen = 1.0);

enum class TrainingPhase { full, dynamic };

// full -> total; dynamic -> lambda_gen * r_gen only.
double decoupled_reward(const RewardBreakdown& breakdown, TrainingPhase phase);

// Built-in critic: maps sharpness/contrast/coverage statistics of the meta
// view onto the 0..9 rubric bands. Pure, thread-safe.
class SyntheticCritic : public CriticInterface {
public:
    int score(const Grid& meta_view, const std::string& prompt) override;
};

// Built-in aesthetic: rewards balanced exposure and contrast, penalizes
// saturated or flat frames.
class ToyAesthetic : public AestheticInterface {
public:
    double score(const Grid& frame) override;
};

// HTTP critic client. Posts a JSON document {system_instruction, prompt,
// image_png_base64} and expects a single ASCII digit back; retries up to 3
// times with exponential backoff, then raises a protocol error.
class RemoteCritic : public CriticInterface {
public:
    explicit RemoteCritic(std::string endpoint_url, int timeout_seconds = 10);
    int score(const Grid& meta_view, const std::string& prompt) override;

    static const char* system_instruction();

private:
    std::string host_;
    int port_ = 80;
    std::string path_;
    int timeout_seconds_;
};

// Everything the full reward evaluation produces for one video.
struct ScoredVideo {
    RewardBreakdown breakdown;
    world::TrajectoryEstimate estimate;
    double reconstruction_psnr = 0.0;
};

struct RewardStack {
    std::shared_ptr<CriticInterface> critic = std::make_shared<SyntheticCritic>();
    std::shared_ptr<AestheticInterface> aesthetic = std::make_shared<ToyAesthetic>();
    double lambda_gen = 1.0;
    int gen_frames = 0;  // 0: use all frames
    TrajWeights traj_weights;
};

// Full pipeline: estimate trajectory, rerender, score all components. With
// include_3d false (dynamic phase) the 3D components are skipped and left 0.
ScoredVideo score_video(const world::Video& video, const std::string& prompt,
                        const se3::Trajectory& target, const homog::Intrinsics& K, double z_ref,
                        RewardStack& stack, bool include_3d = true);

} // namespace planarflow::rewards
