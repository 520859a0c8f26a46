#include "planarflow/rewards.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "planarflow/error.hpp"
#include "planarflow/png.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace planarflow::rewards {

double traj_alignment_score(const se3::Trajectory& target, const se3::Trajectory& estimated,
                            const TrajWeights& weights) {
    if (target.poses.size() != estimated.poses.size())
        raise(ErrorKind::shape_mismatch, "traj_alignment_score: trajectory lengths differ");
    if (target.poses.empty())
        raise(ErrorKind::insufficient_data, "traj_alignment_score: empty trajectories");

    const double raw_len = metrics::path_length(target);
    const double norm = (raw_len > 1e-9) ? raw_len : 1.0;

    double d_trans = 0.0;
    double d_rot = 0.0;
    for (std::size_t i = 0; i < target.poses.size(); ++i) {
        d_trans += (target.poses[i].translation - estimated.poses[i].translation).norm() / norm;
        d_rot += metrics::geodesic_distance(target.poses[i].rotation,
                                            estimated.poses[i].rotation);
    }
    const double n = static_cast<double>(target.poses.size());
    d_trans /= n;
    d_rot /= n;
    return std::exp(-(weights.translation * d_trans + weights.rotation * d_rot));
}

namespace {

constexpr int kWindow = 8;
constexpr int kStride = 4;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr int kMinMaskedPixels = 8;

// Local-statistics similarity of one window over the masked pixel set.
bool window_similarity(const Grid& a, const Grid& b, const std::uint8_t* mask, int wx, int wy,
                       double& out) {
    double ma = 0.0, mb = 0.0;
    int n = 0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const std::size_t i = static_cast<std::size_t>(wy + y) * a.width + (wx + x);
            if (mask && !mask[i]) continue;
            ma += a.v[i];
            mb += b.v[i];
            ++n;
        }
    if (n < kMinMaskedPixels) return false;
    ma /= n;
    mb /= n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const std::size_t i = static_cast<std::size_t>(wy + y) * a.width + (wx + x);
            if (mask && !mask[i]) continue;
            const double da = a.v[i] - ma;
            const double db = b.v[i] - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
        }
    va /= n;
    vb /= n;
    cov /= n;
    out = ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
          ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    return true;
}

} // namespace

double recon_fidelity_score(const world::Video& video, const world::Video& rerendered,
                            const std::vector<std::vector<std::uint8_t>>& interior) {
    if (video.frame_count() != rerendered.frame_count() || video.width() != rerendered.width() ||
        video.height() != rerendered.height())
        raise(ErrorKind::shape_mismatch, "recon_fidelity_score: video shapes differ");
    if (video.frame_count() == 0)
        raise(ErrorKind::insufficient_data, "recon_fidelity_score: empty video");
    if (!interior.empty() && static_cast<int>(interior.size()) != video.frame_count())
        raise(ErrorKind::shape_mismatch, "recon_fidelity_score: mask frame count differs");

    double total = 0.0;
    for (int t = 0; t < video.frame_count(); ++t) {
        const Grid& a = video.frames[t];
        const Grid& b = rerendered.frames[t];
        const std::uint8_t* mask = interior.empty() ? nullptr : interior[t].data();
        double sum = 0.0;
        int windows = 0;
        for (int wy = 0; wy + kWindow <= a.height; wy += kStride)
            for (int wx = 0; wx + kWindow <= a.width; wx += kStride) {
                double s;
                if (window_similarity(a, b, mask, wx, wy, s)) {
                    sum += s;
                    ++windows;
                }
            }
        // A frame whose interior vanished scores zero similarity.
        total += windows > 0 ? sum / windows : -1.0;
    }
    const double mean = total / video.frame_count();
    return std::clamp(0.5 * (mean + 1.0), 0.0, 1.0);
}

se3::Pose meta_view_pose(double z_ref) {
    se3::Pose back;
    back.translation = Eigen::Vector3d(0.0, 0.0, 2.0 * z_ref);
    se3::MotionToken yaw{se3::MotionKind::pan_left, 20.0 * M_PI / 180.0};
    return se3::action_transform(yaw, 1, z_ref).compose(back);
}

double meta_view_score(const world::Rerendered& reconstruction, CriticInterface& critic,
                       const std::string& prompt, const homog::Intrinsics& K, double z_ref) {
    const int w = reconstruction.canonical.width;
    const int h = reconstruction.canonical.height;
    const Grid view = world::render_canonical(reconstruction, meta_view_pose(z_ref), K, z_ref,
                                              w, h);
    const int score = critic.score(view, prompt);
    if (score < 0 || score > 9)
        raise(ErrorKind::protocol, "meta_view_score: critic score outside 0..9");
    return 0.1 * score;
}

double general_reward(const world::Video& video, AestheticInterface& aesthetic, int k) {
    if (k <= 0)
        raise(ErrorKind::domain, "general_reward: frame count must be positive");
    if (k > video.frame_count())
        raise(ErrorKind::domain, "general_reward: k exceeds frame count");
    double sum = 0.0;
    for (int t = 0; t < k; ++t)
        sum += std::clamp(aesthetic.score(video.frames[t]), -1.0, 1.0);
    return sum / k;
}

namespace {

void check_range(double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi))
        raise(ErrorKind::domain,
              std::string("composite_reward: ") + name + " outside declared range");
}

} // namespace

RewardBreakdown composite_reward(double s_meta, double s_recon, double s_traj, double r_gen,
                                 double lambda_gen) {
    check_range(s_meta, 0.0, 1.0, "s_meta");
    check_range(s_recon, 0.0, 1.0, "s_recon");
    check_range(s_traj, 0.0, 1.0, "s_traj");
    check_range(r_gen, -1.0, 1.0, "r_gen");

    RewardBreakdown b;
    b.s_meta = s_meta;
    b.s_recon = s_recon;
    b.s_traj = s_traj;
    b.r_gen = r_gen;
    b.lambda_gen = lambda_gen;
    b.r_3d = s_meta + s_recon + s_traj;
    b.total = b.r_3d + lambda_gen * r_gen;
    return b;
}

double decoupled_reward(const RewardBreakdown& breakdown, TrainingPhase phase) {
    return phase == TrainingPhase::full ? breakdown.total
                                        : breakdown.lambda_gen * breakdown.r_gen;
}

namespace {

struct FrameStats {
    double coverage = 0.0;   // fraction of pixels the reconstruction reaches
    double contrast = 0.0;   // intensity std over covered pixels
    double sharpness = 0.0;  // RMS gradient over covered pixels
};

FrameStats frame_stats(const Grid& g) {
    FrameStats s;
    std::size_t covered = 0;
    double mean = 0.0;
    for (double v : g.v) {
        if (v != 0.0) {
            ++covered;
            mean += v;
        }
    }
    s.coverage = static_cast<double>(covered) / static_cast<double>(g.v.size());
    if (covered == 0) return s;
    mean /= static_cast<double>(covered);

    double var = 0.0;
    for (double v : g.v)
        if (v != 0.0) var += (v - mean) * (v - mean);
    s.contrast = std::sqrt(var / static_cast<double>(covered));

    double grad = 0.0;
    std::size_t grad_n = 0;
    for (int y = 1; y + 1 < g.height; ++y)
        for (int x = 1; x + 1 < g.width; ++x) {
            if (g.at(x, y) == 0.0 || g.at(x + 1, y) == 0.0 || g.at(x - 1, y) == 0.0 ||
                g.at(x, y + 1) == 0.0 || g.at(x, y - 1) == 0.0)
                continue;
            const double gx = 0.5 * (g.at(x + 1, y) - g.at(x - 1, y));
            const double gy = 0.5 * (g.at(x, y + 1) - g.at(x, y - 1));
            grad += gx * gx + gy * gy;
            ++grad_n;
        }
    if (grad_n > 0) s.sharpness = std::sqrt(grad / static_cast<double>(grad_n));
    return s;
}

} // namespace

int SyntheticCritic::score(const Grid& meta_view, const std::string&) {
    const FrameStats s = frame_stats(meta_view);
    if (s.coverage < 0.05) return 0;  // essentially empty rendering
    if (s.coverage < 0.15) return 1;

    // Median compositing of inconsistent frames washes texture out; the
    // gradient-to-contrast ratio separates crisp reconstructions from mush.
    const double ratio = s.sharpness / (s.contrast + 1e-6);
    double quality = std::clamp((ratio - 0.05) / 0.45, 0.0, 1.0);
    quality *= std::clamp(s.contrast / 0.08, 0.0, 1.0);
    quality *= std::clamp(s.coverage / 0.5, 0.0, 1.0);
    return std::clamp(2 + static_cast<int>(std::lround(quality * 7.0)), 0, 9);
}

double ToyAesthetic::score(const Grid& frame) {
    double mean = 0.0;
    std::size_t saturated = 0;
    for (double v : frame.v) {
        mean += v;
        if (v <= 1.0 / 255.0 || v >= 254.0 / 255.0) ++saturated;
    }
    mean /= static_cast<double>(frame.v.size());
    double var = 0.0;
    for (double v : frame.v) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / static_cast<double>(frame.v.size()));

    const double texture = std::min(1.0, 4.0 * stddev);
    const double exposure = 1.0 - 2.0 * std::abs(mean - 0.5);
    const double unsaturated =
        1.0 - static_cast<double>(saturated) / static_cast<double>(frame.v.size());
    return std::clamp(2.0 * texture * exposure * unsaturated - 1.0, -1.0, 1.0);
}

const char* RemoteCritic::system_instruction() {
    // Protocol constant shared with remote critic servers: role, rubric and
    // the single-digit output contract.
    return
        "You are a professional 3D vision expert. A text prompt was used to generate a "
        "video, and the scene reconstructed from that video is shown rendered from a "
        "novel offset viewpoint. Judge the quality of the original video from this "
        "rendering. Score 9 for a dense, clean, complete reconstruction with stable "
        "geometry; 7-8 for clear structure with minor holes or noise; 4-6 for a "
        "recognizable but sparse, noisy, or flat result; 2-3 for a chaotic or badly "
        "distorted result; 0-1 for an empty or unusable one. Output only a single digit "
        "(0-9).";
}

RemoteCritic::RemoteCritic(std::string endpoint_url, int timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
    std::string url = std::move(endpoint_url);
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) == 0) url = url.substr(prefix.size());
    const auto slash = url.find('/');
    path_ = (slash == std::string::npos) ? "/" : url.substr(slash);
    std::string authority = (slash == std::string::npos) ? url : url.substr(0, slash);
    const auto colon = authority.find(':');
    if (colon == std::string::npos) {
        host_ = authority;
    } else {
        host_ = authority.substr(0, colon);
        port_ = std::stoi(authority.substr(colon + 1));
    }
    if (host_.empty())
        raise(ErrorKind::invalid_argument, "RemoteCritic: empty endpoint host");
}

int RemoteCritic::score(const Grid& meta_view, const std::string& prompt) {
    nlohmann::json body = {
        {"system_instruction", system_instruction()},
        {"prompt", prompt},
        {"image_png_base64", png::base64(png::encode_grid(meta_view))},
    };
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    int backoff_ms = 250;
    for (int attempt = 0; attempt < 3; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(host_, port_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        auto res = client.Post(path_, payload, "application/json");
        if (!res) {
            last_error = "connection failed";
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        std::string text = res->body;
        text.erase(std::remove_if(text.begin(), text.end(),
                                  [](unsigned char c) { return std::isspace(c); }),
                   text.end());
        if (text.size() != 1 || text[0] < '0' || text[0] > '9') {
            last_error = "non-digit response";
            continue;
        }
        return text[0] - '0';
    }
    raise(ErrorKind::protocol, "RemoteCritic: retries exhausted (" + last_error + ")");
}

ScoredVideo score_video(const world::Video& video, const std::string& prompt,
                        const se3::Trajectory& target, const homog::Intrinsics& K, double z_ref,
                        RewardStack& stack, bool include_3d) {
    ScoredVideo out;
    const int k = stack.gen_frames > 0 ? std::min(stack.gen_frames, video.frame_count())
                                       : video.frame_count();
    const double r_gen = general_reward(video, *stack.aesthetic, k);

    if (!include_3d) {
        out.breakdown = composite_reward(0.0, 0.0, 0.0, r_gen, stack.lambda_gen);
        return out;
    }

    out.estimate = world::estimate_trajectory(video, K, z_ref);
    const world::Rerendered rr =
        world::rerender_from_estimate(video, out.estimate.trajectory, K, z_ref);
    const double s_traj = traj_alignment_score(target, out.estimate.trajectory,
                                               stack.traj_weights);
    const double s_recon = recon_fidelity_score(video, rr.video, rr.interior);
    const double s_meta = meta_view_score(rr, *stack.critic, prompt, K, z_ref);
    out.reconstruction_psnr = metrics::psnr(video, rr.video, rr.interior);
    out.breakdown = composite_reward(s_meta, s_recon, s_traj, r_gen, stack.lambda_gen);
    return out;
}

} // namespace planarflow::rewards
