#include "volalign/so3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "volalign/error.hpp"

namespace volalign {

namespace {

Mat3 hat(const Vec3& w) {
    Mat3 m;
    m << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
         -w.y(), w.x(), 0.0;
    return m;
}

Vec3 vee_of_difference(const Mat3& r) {
    return {r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
}

} // namespace

Rotation::Rotation(const Mat3& m) : m_matrix(m) {
    if (!m.allFinite())
        throw DomainError("rotation matrix has non-finite entries");
    const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
    const double det = m.determinant();
    if (ortho > kTolerance || std::abs(det - 1.0) > kTolerance)
        throw DomainError("matrix is not in SO(3): |R^T R - I|_F = " + std::to_string(ortho) +
                          ", det = " + std::to_string(det));
}

Rotation Rotation::from_row_major(const std::array<double, 9>& values) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m(i, j) = values[static_cast<std::size_t>(3 * i + j)];
    return Rotation(m);
}

Rotation Rotation::transpose() const {
    Rotation r;
    r.m_matrix = m_matrix.transpose();
    return r;
}

std::array<double, 9> Rotation::row_major() const {
    std::array<double, 9> out{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out[static_cast<std::size_t>(3 * i + j)] = m_matrix(i, j);
    return out;
}

Rotation Rotation::operator*(const Rotation& other) const {
    return Rotation(m_matrix * other.m_matrix);
}

Rotation random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat3 g;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            g(i, j) = normal(rng);
    Eigen::HouseholderQR<Mat3> qr(g);
    Mat3 q = qr.householderQ();
    const Mat3 upper = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign correction makes Q Haar-distributed on O(3).
    for (int k = 0; k < 3; ++k)
        if (upper(k, k) < 0.0)
            q.col(k) *= -1.0;
    if (q.determinant() < 0.0)
        q.col(0) *= -1.0;
    return Rotation(q);
}

Rotation random_rotation(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_rotation(rng);
}

double geodesic_angle_deg(const Rotation& r, const Rotation& s) {
    const double c = ((r.matrix() * s.matrix().transpose()).trace() - 1.0) / 2.0;
    return rad_to_deg(std::acos(std::clamp(c, -1.0, 1.0)));
}

double frobenius_distance(const Rotation& r, const Rotation& s) {
    return (r.matrix() - s.matrix()).norm();
}

Rotation exp_map(const Vec3& omega) {
    const double theta = omega.norm();
    const Mat3 k = hat(omega);
    if (theta < 1e-8)
        return project_to_rotation(Mat3::Identity() + k + 0.5 * k * k);
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Rotation(Mat3::Identity() + a * k + b * k * k);
}

Vec3 log_map(const Rotation& r) {
    const Mat3& m = r.matrix();
    const Vec3 v = vee_of_difference(m);
    const double sin_theta = 0.5 * v.norm();
    const double cos_theta = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double theta = std::atan2(sin_theta, cos_theta);
    if (theta >= kPi - deg_to_rad(1e-6))
        throw DomainError("log_map undefined at a half-turn rotation");
    if (theta < 1e-8)
        return 0.5 * v;
    if (cos_theta > -0.9)
        return (theta / (2.0 * sin_theta)) * v;

    // Near a half turn the skew part vanishes; read the axis from the symmetric part.
    const Mat3 sym = 0.5 * (m + m.transpose()) - cos_theta * Mat3::Identity();
    const double one_minus_cos = 1.0 - cos_theta;
    int i = 0;
    sym.diagonal().maxCoeff(&i);
    const double ki = std::sqrt(std::max(sym(i, i) / one_minus_cos, 0.0));
    Vec3 axis = sym.col(i) / (one_minus_cos * ki);
    axis.normalize();
    if (axis.dot(v) < 0.0)
        axis = -axis;
    return theta * axis;
}

Rotation project_to_rotation(const Mat3& m) {
    if (!m.allFinite())
        throw NumericalError("cannot project a non-finite matrix onto SO(3)");
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv(2) > 1e-12 * std::max(sv(0), 1e-300)))
        throw NumericalError("cannot project a singular matrix onto SO(3)");
    const Mat3 u = svd.matrixU();
    const Mat3 vt = svd.matrixV().transpose();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * vt).determinant() < 0.0 ? -1.0 : 1.0;
    return Rotation(u * d * vt);
}

Rotation rotation_x_deg(double degrees) {
    return exp_map(Vec3::UnitX() * deg_to_rad(degrees));
}

Rotation rotation_y_deg(double degrees) {
    return exp_map(Vec3::UnitY() * deg_to_rad(degrees));
}

Rotation rotation_z_deg(double degrees) {
    return exp_map(Vec3::UnitZ() * deg_to_rad(degrees));
}

} // namespace volalign
