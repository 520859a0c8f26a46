#include "planarflow/homography.hpp"

#include <cmath>

#include "planarflow/error.hpp"

namespace planarflow::homog {

Intrinsics::Intrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
    if (!(fx > 0.0) || !(fy > 0.0))
        raise(ErrorKind::invalid_argument, "Intrinsics: focal lengths must be positive");
}

Intrinsics Intrinsics::centered(int width, int height) {
    return Intrinsics(static_cast<double>(width), static_cast<double>(width),
                      0.5 * (width - 1), 0.5 * (height - 1));
}

Eigen::Matrix3d Intrinsics::matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
}

Eigen::Matrix3d Intrinsics::inverse_matrix() const {
    Eigen::Matrix3d k;
    k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return k;
}

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
    const double scale = m(2, 2);
    if (std::abs(scale) < 1e-12)
        raise(ErrorKind::degenerate, "Homography: h(2,2) vanishes, cannot normalize");
    Homography out;
    out.h = m / scale;
    if (std::abs(out.h.determinant()) <= 1e-12)
        raise(ErrorKind::degenerate, "Homography: matrix is singular");
    return out;
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& u, double* w_out) const {
    const Eigen::Vector3d p = h * Eigen::Vector3d(u.x(), u.y(), 1.0);
    if (w_out) *w_out = p.z();
    return {p.x() / p.z(), p.y() / p.z()};
}

FlowField::FlowField(int w, int h, double du, double dv)
    : width(w), height(h), u(static_cast<std::size_t>(w) * h, du),
      v(static_cast<std::size_t>(w) * h, dv) {}

Homography homography_from_relative(const Intrinsics& K, const se3::Pose& rel, double z_ref,
                                    const Eigen::Vector3d& normal) {
    if (!(z_ref > 0.0))
        raise(ErrorKind::domain, "homography_from_relative: z_ref must be positive");
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        raise(ErrorKind::invalid_argument, "homography_from_relative: normal must be unit length");
    const Eigen::Matrix3d m =
        rel.rotation + rel.translation * normal.transpose() / z_ref;
    return Homography::from_matrix(K.matrix() * m * K.inverse_matrix());
}

FlowField flow_from_homography(const Homography& H, int width, int height) {
    if (width < 1 || height < 1)
        raise(ErrorKind::invalid_argument, "flow_from_homography: empty grid");
    FlowField flow(width, height);
    std::size_t degenerate = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double w = 0.0;
            const Eigen::Vector2d mapped =
                H.apply(Eigen::Vector2d(static_cast<double>(x), static_cast<double>(y)), &w);
            if (w <= 1e-9) {
                flow.invalidate(x, y);
                ++degenerate;
                continue;
            }
            flow.u[flow.index(x, y)] = mapped.x() - x;
            flow.v[flow.index(x, y)] = mapped.y() - y;
        }
    }
    if (degenerate == flow.u.size())
        raise(ErrorKind::degenerate, "flow_from_homography: every pixel projects behind camera");
    return flow;
}

namespace {

struct Normalization {
    Eigen::Matrix3d t;
    Eigen::Matrix3d t_inv;
};

// Hartley normalization: zero centroid, sqrt(2) RMS radius.
Normalization normalize_points(std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    double rms = 0.0;
    for (const auto& p : pts) rms += (p - centroid).squaredNorm();
    rms = std::sqrt(rms / static_cast<double>(pts.size()));
    const double s = (rms > 1e-12) ? std::sqrt(2.0) / rms : 1.0;
    for (auto& p : pts) p = (p - centroid) * s;

    Normalization n;
    n.t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
    n.t_inv << 1.0 / s, 0.0, centroid.x(), 0.0, 1.0 / s, centroid.y(), 0.0, 0.0, 1.0;
    return n;
}

} // namespace

HomographyFit fit_homography(const std::vector<Eigen::Vector2d>& src,
                             const std::vector<Eigen::Vector2d>& dst) {
    if (src.size() != dst.size())
        raise(ErrorKind::shape_mismatch, "fit_homography: correspondence count mismatch");
    if (src.size() < 4)
        raise(ErrorKind::insufficient_data, "fit_homography: need at least 4 correspondences");

    std::vector<Eigen::Vector2d> s = src;
    std::vector<Eigen::Vector2d> d = dst;
    const Normalization ns = normalize_points(s);
    const Normalization nd = normalize_points(d);

    // Accumulate A^T A of the standard two-row DLT system; 9x9 eigensolve of
    // the normal equations is accurate after Hartley normalization and avoids
    // an N x 9 SVD per fit.
    Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 9, 1> row1, row2;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = s[i].x(), y = s[i].y();
        const double xp = d[i].x(), yp = d[i].y();
        row1 << x, y, 1.0, 0.0, 0.0, 0.0, -xp * x, -xp * y, -xp;
        row2 << 0.0, 0.0, 0.0, x, y, 1.0, -yp * x, -yp * y, -yp;
        ata.noalias() += row1 * row1.transpose();
        ata.noalias() += row2 * row2.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata);
    const auto& evals = eig.eigenvalues();
    if (!(evals(1) > 1e-10 * std::max(evals(8), 1.0)))
        raise(ErrorKind::degenerate, "fit_homography: rank-deficient correspondence system");

    const Eigen::Matrix<double, 9, 1> hvec = eig.eigenvectors().col(0);
    Eigen::Matrix3d hn;
    hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);

    HomographyFit fit;
    fit.homography = Homography::from_matrix(nd.t_inv * hn * ns.t);

    double sq = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i)
        sq += (fit.homography.apply(src[i]) - dst[i]).squaredNorm();
    fit.residual_rms = std::sqrt(sq / static_cast<double>(src.size()));
    return fit;
}

HomographyFit fit_homography(const FlowField& flow) {
    std::vector<Eigen::Vector2d> src, dst;
    src.reserve(flow.u.size());
    dst.reserve(flow.u.size());
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            if (!flow.valid(x, y)) continue;
            const std::size_t i = flow.index(x, y);
            src.emplace_back(static_cast<double>(x), static_cast<double>(y));
            dst.emplace_back(x + flow.u[i], y + flow.v[i]);
        }
    }
    if (src.size() < 4)
        raise(ErrorKind::insufficient_data, "fit_homography: fewer than 4 valid flow pixels");
    return fit_homography(src, dst);
}

se3::Pose decompose_homography(const Homography& H, const Intrinsics& K, double z_ref) {
    if (!(z_ref > 0.0))
        raise(ErrorKind::domain, "decompose_homography: z_ref must be positive");

    Eigen::Matrix3d m = K.inverse_matrix() * H.h * K.matrix();
    // For n = (0,0,1) the first two columns of R + t n^T / z_ref are rotation
    // columns, so their mean norm recovers the projective scale.
    const double scale = 0.5 * (m.col(0).norm() + m.col(1).norm());
    if (scale < 1e-12)
        raise(ErrorKind::degenerate, "decompose_homography: vanishing rotation columns");
    m /= scale;
    if (m(2, 2) < 0.0) m = -m;  // sign ambiguity; small motions keep r22 near +1

    Eigen::Vector3d r0 = m.col(0);
    r0.normalize();
    Eigen::Vector3d r1 = m.col(1) - r0.dot(m.col(1)) * r0;
    const double r1n = r1.norm();
    if (r1n < 1e-9)
        raise(ErrorKind::degenerate,
              "decompose_homography: first two columns nearly parallel");
    r1 /= r1n;
    const Eigen::Vector3d r2 = r0.cross(r1);

    se3::Pose pose;
    pose.rotation.col(0) = r0;
    pose.rotation.col(1) = r1;
    pose.rotation.col(2) = r2;
    pose.translation = (m.col(2) - r2) * z_ref;
    return pose;
}

} // namespace planarflow::homog
