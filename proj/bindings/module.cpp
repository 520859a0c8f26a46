#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "planarflow/config.hpp"
#include "planarflow/corpus.hpp"
#include "planarflow/grpo.hpp"
#include "planarflow/homography.hpp"
#include "planarflow/io.hpp"
#include "planarflow/metrics.hpp"
#include "planarflow/noise.hpp"
#include "planarflow/policy.hpp"
#include "planarflow/rewards.hpp"
#include "planarflow/sampler.hpp"
#include "planarflow/se3.hpp"
#include "planarflow/world.hpp"

namespace py = pybind11;
using namespace planarflow;

namespace {

Grid grid_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Grid g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), g.v.begin());
    return g;
}

py::array_t<double> array_from_grid(const Grid& g) {
    py::array_t<double> a({g.height, g.width});
    std::copy(g.v.begin(), g.v.end(), a.mutable_data());
    return a;
}

Volume volume_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw py::value_error("expected a 3-D array (frames, height, width)");
    Volume v(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)),
             static_cast<int>(a.shape(1)));
    const double* src = a.data();
    for (auto& frame : v.frames) {
        std::copy(src, src + frame.v.size(), frame.v.begin());
        src += frame.v.size();
    }
    return v;
}

py::array_t<double> array_from_volume(const Volume& v) {
    py::array_t<double> a({v.frame_count(), v.height(), v.width()});
    double* dst = a.mutable_data();
    for (const auto& frame : v.frames) {
        std::copy(frame.v.begin(), frame.v.end(), dst);
        dst += frame.v.size();
    }
    return a;
}

se3::Trajectory trajectory_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(1) != 3 || a.shape(2) != 4)
        throw py::value_error("expected trajectory array of shape (n, 3, 4)");
    se3::Trajectory t;
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        se3::Pose p;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) p.rotation(r, c) = a.at(i, r, c);
            p.translation(r) = a.at(i, r, 3);
        }
        t.poses.push_back(p);
    }
    return t;
}

py::array_t<double> array_from_trajectory(const se3::Trajectory& t) {
    py::array_t<double> a({static_cast<py::ssize_t>(t.poses.size()), py::ssize_t(3),
                           py::ssize_t(4)});
    auto view = a.mutable_unchecked<3>();
    for (std::size_t i = 0; i < t.poses.size(); ++i)
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) view(i, r, c) = t.poses[i].rotation(r, c);
            view(i, r, 3) = t.poses[i].translation(r);
        }
    return a;
}

Eigen::Matrix3d mat3_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != 3 || a.shape(1) != 3)
        throw py::value_error("expected a 3x3 array");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = a.at(r, c);
    return m;
}

py::array_t<double> array_from_mat3(const Eigen::Matrix3d& m) {
    py::array_t<double> a({3, 3});
    auto view = a.mutable_unchecked<2>();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) view(r, c) = m(r, c);
    return a;
}

std::vector<se3::MotionToken> tokens_from_names(const std::vector<std::string>& names,
                                                double z_ref) {
    const se3::MotionDefaults defaults = se3::MotionDefaults::for_depth(z_ref);
    std::vector<se3::MotionToken> tokens;
    for (const std::string& n : names) {
        se3::MotionKind kind;
        if (!se3::motion_kind_from_name(n, kind))
            throw py::value_error("unknown motion kind: " + n);
        tokens.push_back(defaults.token(kind));
    }
    return tokens;
}

homog::Intrinsics intrinsics_from_tuple(const std::tuple<double, double, double, double>& k) {
    return homog::Intrinsics(std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k));
}

py::dict breakdown_to_dict(const rewards::RewardBreakdown& b) {
    py::dict d;
    d["s_meta"] = b.s_meta;
    d["s_recon"] = b.s_recon;
    d["s_traj"] = b.s_traj;
    d["r_3d"] = b.r_3d;
    d["r_gen"] = b.r_gen;
    d["total"] = b.total;
    d["lambda_gen"] = b.lambda_gen;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "planarflow core: camera-conditioned flow-matching RL over a planar toy world";

    py::register_exception<Error>(m, "PlanarflowError");

    // --- se3 ---
    m.def(
        "detect_motion_tokens",
        [](const std::string& prompt, double z_ref) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& t :
                 se3::detect_motion_tokens(prompt, se3::MotionDefaults::for_depth(z_ref)))
                out.emplace_back(std::string(se3::motion_kind_name(t.kind)), t.magnitude);
            return out;
        },
        py::arg("prompt"), py::arg("z_ref") = 5.0,
        "Scan a prompt for motion keywords; returns (kind, magnitude) pairs.");

    m.def(
        "synthesize_trajectory",
        [](const std::vector<std::string>& kinds, int frames, double z_ref) {
            return array_from_trajectory(
                se3::synthesize_trajectory(tokens_from_names(kinds, z_ref), frames, z_ref));
        },
        py::arg("kinds"), py::arg("frames"), py::arg("z_ref") = 5.0,
        "Recursive pose composition; returns an (frames+1, 3, 4) array of [R|t].");

    m.def(
        "trajectory_for_prompt",
        [](const std::string& prompt, int frames, double z_ref) {
            const auto tokens =
                se3::detect_motion_tokens(prompt, se3::MotionDefaults::for_depth(z_ref));
            return array_from_trajectory(se3::synthesize_trajectory(tokens, frames, z_ref));
        },
        py::arg("prompt"), py::arg("frames"), py::arg("z_ref") = 5.0);

    // --- homography / flow ---
    m.def(
        "homography_from_relative",
        [](const std::tuple<double, double, double, double>& K, const py::array_t<double>& rot,
           const py::array_t<double>& trans, double z_ref) {
            se3::Pose rel;
            rel.rotation = mat3_from_array(rot);
            auto t = trans.unchecked<1>();
            rel.translation = Eigen::Vector3d(t(0), t(1), t(2));
            return array_from_mat3(
                homog::homography_from_relative(intrinsics_from_tuple(K), rel, z_ref).h);
        },
        py::arg("intrinsics"), py::arg("rotation"), py::arg("translation"), py::arg("z_ref"));

    m.def(
        "flow_from_homography",
        [](const py::array_t<double>& H, int width, int height) {
            const auto flow =
                homog::flow_from_homography(homog::Homography::from_matrix(mat3_from_array(H)),
                                            width, height);
            Grid u(width, height), v(width, height);
            u.v = flow.u;
            v.v = flow.v;
            return py::make_tuple(array_from_grid(u), array_from_grid(v));
        },
        py::arg("homography"), py::arg("width"), py::arg("height"),
        "Returns (u, v) displacement planes; invalid pixels hold float32-max.");

    m.def(
        "fit_homography",
        [](const py::array_t<double>& u, const py::array_t<double>& v) {
            homog::FlowField flow(static_cast<int>(u.shape(1)), static_cast<int>(u.shape(0)));
            flow.u = grid_from_array(u).v;
            flow.v = grid_from_array(v).v;
            const auto fit = homog::fit_homography(flow);
            return py::make_tuple(array_from_mat3(fit.homography.h), fit.residual_rms);
        },
        py::arg("u"), py::arg("v"));

    m.def(
        "decompose_homography",
        [](const py::array_t<double>& H, const std::tuple<double, double, double, double>& K,
           double z_ref) {
            const se3::Pose p = homog::decompose_homography(
                homog::Homography::from_matrix(mat3_from_array(H)), intrinsics_from_tuple(K),
                z_ref);
            py::array_t<double> t(3);
            auto tv = t.mutable_unchecked<1>();
            for (int i = 0; i < 3; ++i) tv(i) = p.translation(i);
            return py::make_tuple(array_from_mat3(p.rotation), t);
        },
        py::arg("homography"), py::arg("intrinsics"), py::arg("z_ref"));

    // --- noise transport ---
    m.def(
        "sample_noise",
        [](int width, int height, int channels, std::uint64_t seed) {
            Rng rng(seed);
            const auto g = noise::sample_noise_grid(width, height, channels, rng);
            py::array_t<double> a({channels, height, width});
            std::copy(g.values.begin(), g.values.end(), a.mutable_data());
            return a;
        },
        py::arg("width"), py::arg("height"), py::arg("channels") = 1, py::arg("seed") = 0);

    m.def(
        "warp_noise_volume",
        [](const py::array_t<double>& initial, const py::array_t<double>& trajectory,
           const std::tuple<double, double, double, double>& K, double z_ref,
           std::uint64_t seed) {
            const auto a = py::array_t<double, py::array::c_style | py::array::forcecast>(
                initial);
            if (a.ndim() != 3) throw py::value_error("initial noise must be (channels, h, w)");
            noise::NoiseGrid g(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)),
                               static_cast<int>(a.shape(0)));
            std::copy(a.data(), a.data() + a.size(), g.values.begin());
            const auto volume =
                noise::warp_noise_volume(g, trajectory_from_array(trajectory),
                                         intrinsics_from_tuple(K), z_ref, Rng(seed, 0xd15cu));
            py::array_t<double> out(
                {volume.frame_count(), g.channels, g.height, g.width});
            double* dst = out.mutable_data();
            for (const auto& frame : volume.frames) {
                std::copy(frame.values.begin(), frame.values.end(), dst);
                dst += frame.values.size();
            }
            return out;
        },
        py::arg("initial"), py::arg("trajectory"), py::arg("intrinsics"), py::arg("z_ref"),
        py::arg("seed") = 0,
        "Density-normalized mass transport of noise along the trajectory-induced flow.");

    // --- toy world ---
    m.def(
        "generate_scene",
        [](std::uint64_t seed, double smoothness, int size) {
            return array_from_grid(world::generate_scene(seed, smoothness, size, size).texture);
        },
        py::arg("seed"), py::arg("smoothness") = 0.8, py::arg("size") = 192);

    m.def(
        "render_video",
        [](const py::array_t<double>& texture, const py::array_t<double>& trajectory,
           const std::tuple<double, double, double, double>& K, double z_ref, int width,
           int height) {
            world::Scene scene;
            scene.texture = grid_from_array(texture);
            scene.plane_depth = z_ref;
            return array_from_volume(world::render_video(
                scene, trajectory_from_array(trajectory), intrinsics_from_tuple(K), width,
                height));
        },
        py::arg("texture"), py::arg("trajectory"), py::arg("intrinsics"), py::arg("z_ref"),
        py::arg("width"), py::arg("height"));

    m.def(
        "estimate_trajectory",
        [](const py::array_t<double>& video, const std::tuple<double, double, double, double>& K,
           double z_ref) {
            const auto est = world::estimate_trajectory(volume_from_array(video),
                                                        intrinsics_from_tuple(K), z_ref);
            return py::make_tuple(array_from_trajectory(est.trajectory), est.residuals,
                                  est.high_residual);
        },
        py::arg("video"), py::arg("intrinsics"), py::arg("z_ref"),
        "Block-matching trajectory estimate; returns (poses, residuals, suspect_flags).");

    m.def(
        "rerender",
        [](const py::array_t<double>& video, const py::array_t<double>& trajectory,
           const std::tuple<double, double, double, double>& K, double z_ref) {
            const auto rr =
                world::rerender_from_estimate(volume_from_array(video),
                                              trajectory_from_array(trajectory),
                                              intrinsics_from_tuple(K), z_ref);
            return array_from_volume(rr.video);
        },
        py::arg("video"), py::arg("trajectory"), py::arg("intrinsics"), py::arg("z_ref"));

    // --- metrics ---
    m.def(
        "psnr",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
            return metrics::psnr(volume_from_array(a), volume_from_array(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "local_similarity",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
            return metrics::local_similarity(volume_from_array(a), volume_from_array(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "camera_errors",
        [](const py::array_t<double>& target, const py::array_t<double>& estimated) {
            const auto e = metrics::camera_errors(trajectory_from_array(target),
                                                  trajectory_from_array(estimated));
            py::dict d;
            d["rot_err"] = e.rot_err;
            d["trans_err"] = e.trans_err;
            d["cam_mc"] = e.cam_mc;
            return d;
        },
        py::arg("target"), py::arg("estimated"));

    // --- rewards ---
    m.def(
        "traj_alignment_score",
        [](const py::array_t<double>& target, const py::array_t<double>& estimated) {
            return rewards::traj_alignment_score(trajectory_from_array(target),
                                                 trajectory_from_array(estimated));
        },
        py::arg("target"), py::arg("estimated"));
    m.def("composite_reward",
          [](double s_meta, double s_recon, double s_traj, double r_gen, double lambda_gen) {
              return breakdown_to_dict(
                  rewards::composite_reward(s_meta, s_recon, s_traj, r_gen, lambda_gen));
          },
          py::arg("s_meta"), py::arg("s_recon"), py::arg("s_traj"), py::arg("r_gen"),
          py::arg("lambda_gen") = 1.0);
    m.def(
        "score_video",
        [](const py::array_t<double>& video, const std::string& prompt,
           const py::array_t<double>& target, const std::tuple<double, double, double, double>& K,
           double z_ref) {
            rewards::RewardStack stack;
            const auto scored =
                rewards::score_video(volume_from_array(video), prompt,
                                     trajectory_from_array(target), intrinsics_from_tuple(K),
                                     z_ref, stack);
            py::dict d = breakdown_to_dict(scored.breakdown);
            d["reconstruction_psnr"] = scored.reconstruction_psnr;
            return d;
        },
        py::arg("video"), py::arg("prompt"), py::arg("target"), py::arg("intrinsics"),
        py::arg("z_ref"),
        "Full composite reward with the built-in critic and aesthetic scorers.");

    // --- GRPO arithmetic ---
    m.def("compute_advantages", &grpo::compute_advantages, py::arg("rewards"),
          py::arg("sample_std") = false);
    m.def("clipped_surrogate", &grpo::clipped_surrogate, py::arg("ratio"), py::arg("advantage"),
          py::arg("eps"));

    // --- sampler ---
    m.def("sigma", &sampler::sigma, py::arg("t"), py::arg("noise_scale"),
          py::arg("epsilon_floor") = 1e-3);

    m.def(
        "rollout_video",
        [](const std::string& checkpoint, const std::string& prompt,
           const py::array_t<double>& initial_latent,
           const std::tuple<double, double, double, double>&, double z_ref, int steps,
           std::uint64_t seed) {
            const auto model = io::read_checkpoint(checkpoint);
            const auto tokens =
                se3::detect_motion_tokens(prompt, se3::MotionDefaults::for_depth(z_ref));
            policy::Condition cond = policy::Condition::from_tokens(tokens);
            const auto schedule = sampler::SamplingSchedule::deterministic(steps);
            Rng rng(seed);
            const auto rollout =
                sampler::sample_rollout(sampler::bind_model(model, cond),
                                        volume_from_array(initial_latent), schedule, rng);
            return array_from_volume(rollout.video);
        },
        py::arg("checkpoint"), py::arg("prompt"), py::arg("initial_latent"),
        py::arg("intrinsics"), py::arg("z_ref"), py::arg("steps") = 40, py::arg("seed") = 0,
        "Deterministic ODE rollout of a saved model; returns the squashed video.");

    // --- corpus ---
    m.def("generate_example_corpus",
          [](const std::string& path, int n, std::uint64_t seed) {
              Rng rng(seed, 0xc0a9u);
              corpus::generate_example_corpus(path, n, rng);
          },
          py::arg("path"), py::arg("n"), py::arg("seed") = 0);
    m.def("load_corpus_summary",
          [](const std::string& path) {
              const auto c = corpus::load_corpus(path);
              int dynamic = 0;
              for (const auto& e : c.entries) dynamic += e.dynamic ? 1 : 0;
              py::dict d;
              d["entries"] = c.entries.size();
              d["dynamic"] = dynamic;
              d["warnings"] = c.warnings.size();
              return d;
          },
          py::arg("path"));
}
