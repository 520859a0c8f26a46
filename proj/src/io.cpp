#include "planarflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "planarflow/error.hpp"

namespace planarflow::io {

namespace {

void write_bytes(std::ofstream& f, const void* data, std::size_t n) {
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& f, void* data, std::size_t n, const char* what) {
    f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
    if (f.gcount() != static_cast<std::streamsize>(n))
        raise(ErrorKind::io, std::string(what) + ": truncated file");
}

void put_u32(std::ofstream& f, std::uint32_t v) { write_bytes(f, &v, 4); }

std::uint32_t get_u32(std::ifstream& f, const char* what) {
    std::uint32_t v;
    read_bytes(f, &v, 4, what);
    return v;
}

void put_f32_plane(std::ofstream& f, const std::vector<double>& v) {
    std::vector<float> tmp(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) tmp[i] = static_cast<float>(v[i]);
    write_bytes(f, tmp.data(), tmp.size() * 4);
}

void get_f32_plane(std::ifstream& f, std::vector<double>& v, const char* what) {
    std::vector<float> tmp(v.size());
    read_bytes(f, tmp.data(), tmp.size() * 4, what);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(tmp[i]);
}

std::ofstream open_out(const std::string& path, const char* what) {
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::io, std::string(what) + ": cannot open " + path);
    return f;
}

std::ifstream open_in(const std::string& path, const char* what) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::io, std::string(what) + ": cannot open " + path);
    return f;
}

} // namespace

void write_flow(const std::string& path, const homog::FlowField& flow) {
    auto f = open_out(path, "write_flow");
    put_u32(f, static_cast<std::uint32_t>(flow.width));
    put_u32(f, static_cast<std::uint32_t>(flow.height));
    put_f32_plane(f, flow.u);
    put_f32_plane(f, flow.v);
}

homog::FlowField read_flow(const std::string& path) {
    auto f = open_in(path, "read_flow");
    const std::uint32_t w = get_u32(f, "read_flow");
    const std::uint32_t h = get_u32(f, "read_flow");
    homog::FlowField flow(static_cast<int>(w), static_cast<int>(h));
    get_f32_plane(f, flow.u, "read_flow");
    get_f32_plane(f, flow.v, "read_flow");
    return flow;
}

void write_noise_volume(const std::string& path, const noise::NoiseVolume& volume) {
    auto f = open_out(path, "write_noise_volume");
    const int frames = volume.frame_count();
    if (frames == 0) raise(ErrorKind::invalid_argument, "write_noise_volume: empty volume");
    put_u32(f, static_cast<std::uint32_t>(frames));
    put_u32(f, static_cast<std::uint32_t>(volume.frames[0].width));
    put_u32(f, static_cast<std::uint32_t>(volume.frames[0].height));
    put_u32(f, static_cast<std::uint32_t>(volume.frames[0].channels));
    for (const noise::NoiseGrid& g : volume.frames) put_f32_plane(f, g.values);
}

noise::NoiseVolume read_noise_volume(const std::string& path) {
    auto f = open_in(path, "read_noise_volume");
    const std::uint32_t frames = get_u32(f, "read_noise_volume");
    const std::uint32_t w = get_u32(f, "read_noise_volume");
    const std::uint32_t h = get_u32(f, "read_noise_volume");
    const std::uint32_t c = get_u32(f, "read_noise_volume");
    noise::NoiseVolume volume;
    for (std::uint32_t i = 0; i < frames; ++i) {
        noise::NoiseGrid g(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
        get_f32_plane(f, g.values, "read_noise_volume");
        volume.frames.push_back(std::move(g));
    }
    return volume;
}

void write_volume(const std::string& path, const Volume& volume) {
    auto f = open_out(path, "write_volume");
    if (volume.frame_count() == 0)
        raise(ErrorKind::invalid_argument, "write_volume: empty volume");
    put_u32(f, static_cast<std::uint32_t>(volume.frame_count()));
    put_u32(f, static_cast<std::uint32_t>(volume.width()));
    put_u32(f, static_cast<std::uint32_t>(volume.height()));
    for (const Grid& g : volume.frames) put_f32_plane(f, g.v);
}

Volume read_volume(const std::string& path) {
    auto f = open_in(path, "read_volume");
    const std::uint32_t frames = get_u32(f, "read_volume");
    const std::uint32_t w = get_u32(f, "read_volume");
    const std::uint32_t h = get_u32(f, "read_volume");
    Volume volume;
    for (std::uint32_t i = 0; i < frames; ++i) {
        Grid g(static_cast<int>(w), static_cast<int>(h));
        get_f32_plane(f, g.v, "read_volume");
        volume.frames.push_back(std::move(g));
    }
    return volume;
}

void write_video_pgm(const std::string& directory, const Volume& video) {
    ensure_directory(directory);
    for (int t = 0; t < video.frame_count(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.pgm", t);
        auto f = open_out(directory + "/" + name, "write_video_pgm");
        const Grid& g = video.frames[t];
        f << "P5\n" << g.width << " " << g.height << "\n255\n";
        std::vector<std::uint8_t> row(static_cast<std::size_t>(g.width));
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x)
                row[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(g.at(x, y), 0.0, 1.0) * 255.0));
            write_bytes(f, row.data(), row.size());
        }
    }
}

namespace {
constexpr char kCheckpointMagic[4] = {'P', 'F', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;
} // namespace

void write_checkpoint(const std::string& path, const policy::VelocityModel& model) {
    auto f = open_out(path, "write_checkpoint");
    write_bytes(f, kCheckpointMagic, 4);
    put_u32(f, kCheckpointVersion);
    put_u32(f, static_cast<std::uint32_t>(model.patch));
    put_u32(f, static_cast<std::uint32_t>(model.hidden1));
    put_u32(f, static_cast<std::uint32_t>(model.hidden2));
    const std::uint64_t count = model.params.size();
    write_bytes(f, &count, 8);
    write_bytes(f, model.params.data(), model.params.size() * 8);
}

policy::VelocityModel read_checkpoint(const std::string& path) {
    auto f = open_in(path, "read_checkpoint");
    char magic[4];
    read_bytes(f, magic, 4, "read_checkpoint");
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        raise(ErrorKind::io, "read_checkpoint: bad magic in " + path);
    if (get_u32(f, "read_checkpoint") != kCheckpointVersion)
        raise(ErrorKind::io, "read_checkpoint: unsupported format version");
    const int patch = static_cast<int>(get_u32(f, "read_checkpoint"));
    const int h1 = static_cast<int>(get_u32(f, "read_checkpoint"));
    const int h2 = static_cast<int>(get_u32(f, "read_checkpoint"));
    std::uint64_t count;
    read_bytes(f, &count, 8, "read_checkpoint");
    policy::VelocityModel model = policy::VelocityModel::zeros(patch, h1, h2);
    if (count != model.params.size())
        raise(ErrorKind::io, "read_checkpoint: parameter count does not match architecture");
    read_bytes(f, model.params.data(), model.params.size() * 8, "read_checkpoint");
    return model;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(const std::string& path, const se3::Trajectory& trajectory,
                          const std::vector<std::string>& annotations) {
    std::ofstream f(path);
    if (!f) raise(ErrorKind::io, "write_trajectory_csv: cannot open " + path);
    for (const std::string& a : annotations) f << "# " << a << "\n";
    f << "frame,r00,r01,r02,r10,r11,r12,r20,r21,r22,t0,t1,t2\n";
    for (std::size_t i = 0; i < trajectory.poses.size(); ++i) {
        const se3::Pose& p = trajectory.poses[i];
        f << i;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) f << "," << format_double(p.rotation(r, c));
        for (int r = 0; r < 3; ++r) f << "," << format_double(p.translation(r));
        f << "\n";
    }
}

se3::Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::io, "read_trajectory_csv: cannot open " + path);
    se3::Trajectory traj;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("frame,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 13)
            raise(ErrorKind::io, "read_trajectory_csv: malformed row");
        se3::Pose p;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) p.rotation(r, c) = vals[1 + r * 3 + c];
        for (int r = 0; r < 3; ++r) p.translation(r) = vals[10 + r];
        traj.poses.push_back(p);
    }
    if (traj.poses.empty())
        raise(ErrorKind::io, "read_trajectory_csv: no poses in " + path);
    return traj;
}

void write_rollout(const std::string& path, const sampler::Rollout& rollout) {
    auto f = open_out(path, "write_rollout");
    put_u32(f, static_cast<std::uint32_t>(rollout.transitions.size()));
    put_u32(f, static_cast<std::uint32_t>(rollout.final_latent.frame_count()));
    put_u32(f, static_cast<std::uint32_t>(rollout.final_latent.width()));
    put_u32(f, static_cast<std::uint32_t>(rollout.final_latent.height()));
    const double squash[2] = {rollout.squash.gain, rollout.squash.center};
    write_bytes(f, squash, 16);
    for (const sampler::Transition& tr : rollout.transitions) {
        put_u32(f, static_cast<std::uint32_t>(tr.step));
        const std::uint8_t flag = tr.is_stochastic ? 1 : 0;
        write_bytes(f, &flag, 1);
        const double scalars[4] = {tr.t_from, tr.dt, tr.std_dev, tr.log_prob};
        write_bytes(f, scalars, 32);
        for (const Grid& g : tr.x_from.frames) put_f32_plane(f, g.v);
        for (const Grid& g : tr.x_to.frames) put_f32_plane(f, g.v);
    }
    for (const Grid& g : rollout.final_latent.frames) put_f32_plane(f, g.v);
}

sampler::Rollout read_rollout(const std::string& path) {
    auto f = open_in(path, "read_rollout");
    const std::uint32_t n = get_u32(f, "read_rollout");
    const std::uint32_t frames = get_u32(f, "read_rollout");
    const std::uint32_t w = get_u32(f, "read_rollout");
    const std::uint32_t h = get_u32(f, "read_rollout");
    sampler::Rollout rollout;
    double squash[2];
    read_bytes(f, squash, 16, "read_rollout");
    rollout.squash.gain = squash[0];
    rollout.squash.center = squash[1];
    auto read_vol = [&] {
        Volume v;
        for (std::uint32_t i = 0; i < frames; ++i) {
            Grid g(static_cast<int>(w), static_cast<int>(h));
            get_f32_plane(f, g.v, "read_rollout");
            v.frames.push_back(std::move(g));
        }
        return v;
    };
    for (std::uint32_t i = 0; i < n; ++i) {
        sampler::Transition tr;
        tr.step = static_cast<int>(get_u32(f, "read_rollout"));
        std::uint8_t flag;
        read_bytes(f, &flag, 1, "read_rollout");
        tr.is_stochastic = flag != 0;
        double scalars[4];
        read_bytes(f, scalars, 32, "read_rollout");
        tr.t_from = scalars[0];
        tr.dt = scalars[1];
        tr.std_dev = scalars[2];
        tr.log_prob = scalars[3];
        tr.x_from = read_vol();
        tr.x_to = read_vol();
        rollout.transitions.push_back(std::move(tr));
    }
    rollout.final_latent = read_vol();
    rollout.video = sampler::apply_squash(rollout.final_latent, rollout.squash);
    return rollout;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) raise(ErrorKind::io, "cannot create directory " + path + ": " + ec.message());
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto not_ws = line.find_first_not_of(" \t\r");
        if (not_ws == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::io,
                  "config line " + std::to_string(line_no) + ": expected 'key = value'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            raise(ErrorKind::io, "config line " + std::to_string(line_no) + ": empty key");
        kv.emplace_back(key, value);
    }
    return kv;
}

KeyValues load_key_values(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::io, "config: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_key_values(buf.str());
}

} // namespace planarflow::io
