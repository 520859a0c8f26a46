#include "planarflow/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "planarflow/error.hpp"

namespace planarflow::metrics {

double geodesic_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    const double c = 0.5 * ((a.transpose() * b).trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

double path_length(const se3::Trajectory& t) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < t.poses.size(); ++i)
        len += (t.poses[i + 1].translation - t.poses[i].translation).norm();
    return len;
}

CameraErrors camera_errors(const se3::Trajectory& target, const se3::Trajectory& estimated) {
    if (target.poses.size() != estimated.poses.size())
        raise(ErrorKind::shape_mismatch, "camera_errors: trajectory lengths differ");
    if (target.poses.empty())
        raise(ErrorKind::insufficient_data, "camera_errors: empty trajectories");

    const double raw_len = path_length(target);
    const double norm = (raw_len > 1e-9) ? raw_len : 1.0;

    CameraErrors e;
    const double n = static_cast<double>(target.poses.size());
    for (std::size_t i = 0; i < target.poses.size(); ++i) {
        const se3::Pose& a = target.poses[i];
        const se3::Pose& b = estimated.poses[i];
        e.rot_err += geodesic_distance(a.rotation, b.rotation) * 180.0 / M_PI;
        e.trans_err += (a.translation - b.translation).norm() / norm;

        Eigen::Matrix<double, 3, 4> ma, mb;
        ma.leftCols<3>() = a.rotation;
        ma.col(3) = a.translation / norm;
        mb.leftCols<3>() = b.rotation;
        mb.col(3) = b.translation / norm;
        e.cam_mc += (ma - mb).norm();
    }
    e.rot_err /= n;
    e.trans_err /= n;
    e.cam_mc /= n;
    return e;
}

double psnr(const Volume& a, const Volume& b,
            const std::vector<std::vector<std::uint8_t>>& mask) {
    if (a.frame_count() != b.frame_count() || a.width() != b.width() || a.height() != b.height())
        raise(ErrorKind::shape_mismatch, "psnr: video shapes differ");
    if (a.frame_count() == 0)
        raise(ErrorKind::insufficient_data, "psnr: empty video");
    if (!mask.empty() && static_cast<int>(mask.size()) != a.frame_count())
        raise(ErrorKind::shape_mismatch, "psnr: mask frame count differs");

    double total = 0.0;
    for (int t = 0; t < a.frame_count(); ++t) {
        const Grid& fa = a.frames[t];
        const Grid& fb = b.frames[t];
        double mse = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < fa.v.size(); ++i) {
            if (!mask.empty() && !mask[t][i]) continue;
            const double d = fa.v[i] - fb.v[i];
            mse += d * d;
            ++count;
        }
        if (count == 0)
            raise(ErrorKind::domain, "psnr: empty pixel mask");
        mse /= static_cast<double>(count);
        total += (mse <= 0.0) ? kPsnrCap : std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
    }
    return total / a.frame_count();
}

namespace {

constexpr int kWindow = 8;
constexpr int kStride = 4;
// Standard stabilizers for unit dynamic range.
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double frame_similarity(const Grid& a, const Grid& b) {
    double total = 0.0;
    int windows = 0;
    for (int wy = 0; wy + kWindow <= a.height; wy += kStride) {
        for (int wx = 0; wx + kWindow <= a.width; wx += kStride) {
            double ma = 0.0, mb = 0.0;
            for (int y = 0; y < kWindow; ++y)
                for (int x = 0; x < kWindow; ++x) {
                    ma += a.at(wx + x, wy + y);
                    mb += b.at(wx + x, wy + y);
                }
            constexpr double inv_n = 1.0 / (kWindow * kWindow);
            ma *= inv_n;
            mb *= inv_n;
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (int y = 0; y < kWindow; ++y)
                for (int x = 0; x < kWindow; ++x) {
                    const double da = a.at(wx + x, wy + y) - ma;
                    const double db = b.at(wx + x, wy + y) - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            va *= inv_n;
            vb *= inv_n;
            cov *= inv_n;
            const double s = ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
            total += s;
            ++windows;
        }
    }
    return total / windows;
}

} // namespace

double local_similarity(const Volume& a, const Volume& b) {
    if (a.frame_count() != b.frame_count() || a.width() != b.width() || a.height() != b.height())
        raise(ErrorKind::shape_mismatch, "local_similarity: video shapes differ");
    if (a.frame_count() == 0)
        raise(ErrorKind::insufficient_data, "local_similarity: empty video");
    if (a.width() < kWindow || a.height() < kWindow)
        raise(ErrorKind::domain, "local_similarity: frames smaller than window");

    double total = 0.0;
    for (int t = 0; t < a.frame_count(); ++t)
        total += frame_similarity(a.frames[t], b.frames[t]);
    // SSIM-style values can dip slightly negative; map mean to [0,1].
    return std::clamp(0.5 * (total / a.frame_count() + 1.0), 0.0, 1.0);
}

} // namespace planarflow::metrics
