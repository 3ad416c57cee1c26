#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace volalign {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Proper rotation: orthonormal 3x3 matrix with determinant +1. Every
// constructor checks the invariants, so a Rotation value is always valid.
class Rotation {
public:
    static constexpr double kTolerance = 1e-10;

    Rotation() : m_matrix(Mat3::Identity()) {}

    // Throws DomainError if `m` is not in SO(3) within kTolerance.
    explicit Rotation(const Mat3& m);

    static Rotation identity() { return Rotation{}; }
    static Rotation from_row_major(const std::array<double, 9>& values);

    [[nodiscard]] const Mat3& matrix() const noexcept { return m_matrix; }
    [[nodiscard]] Rotation transpose() const;
    [[nodiscard]] std::array<double, 9> row_major() const;

    Rotation operator*(const Rotation& other) const;
    Vec3 operator*(const Vec3& v) const { return m_matrix * v; }

    bool operator==(const Rotation& other) const { return m_matrix == other.m_matrix; }

private:
    Mat3 m_matrix;
};

// Haar-uniform rotation from QR of an i.i.d. Gaussian matrix.
Rotation random_rotation(std::mt19937_64& rng);
Rotation random_rotation(std::uint64_t seed);

// Relative rotation angle arccos((tr(R S^T) - 1) / 2), in degrees.
double geodesic_angle_deg(const Rotation& r, const Rotation& s);
double frobenius_distance(const Rotation& r, const Rotation& s);

// Rodrigues exponential of an axis-angle vector (radians).
Rotation exp_map(const Vec3& omega);
// Inverse of exp_map; throws DomainError within 1e-6 degrees of a half turn.
Vec3 log_map(const Rotation& r);

// Nearest rotation in Frobenius norm (polar factor with determinant fix).
// Throws NumericalError when `m` is numerically singular.
Rotation project_to_rotation(const Mat3& m);

Rotation rotation_x_deg(double degrees);
Rotation rotation_y_deg(double degrees);
Rotation rotation_z_deg(double degrees);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

} // namespace volalign
