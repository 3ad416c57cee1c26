#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "volalign/so3.hpp"

namespace volalign {

// Cubic voxel grid of densities, x fastest. Voxel (i, j, k) sits at the
// physical point (i, j, k) - (L - 1) / 2 in voxel units, so the grid center is
// the origin for rotations, shifts and centers of mass.
class Volume {
public:
    Volume() = default;
    // Throws ArgumentError unless data.size() == side^3 and every value is finite.
    Volume(int side, std::vector<double> data, std::optional<double> voxel_size = std::nullopt);

    static Volume zeros(int side, std::optional<double> voxel_size = std::nullopt);

    [[nodiscard]] int side() const noexcept { return m_side; }
    [[nodiscard]] std::size_t size() const noexcept { return m_data.size(); }
    [[nodiscard]] std::span<const double> data() const noexcept { return m_data; }
    [[nodiscard]] std::span<double> data() noexcept { return m_data; }
    [[nodiscard]] std::optional<double> voxel_size() const noexcept { return m_voxel_size; }
    void set_voxel_size(std::optional<double> size) { m_voxel_size = size; }

    [[nodiscard]] std::size_t index(int i, int j, int k) const noexcept {
        const auto l = static_cast<std::size_t>(m_side);
        return static_cast<std::size_t>(i) + l * (static_cast<std::size_t>(j) + l * static_cast<std::size_t>(k));
    }
    double& operator()(int i, int j, int k) noexcept { return m_data[index(i, j, k)]; }
    double operator()(int i, int j, int k) const noexcept { return m_data[index(i, j, k)]; }

    // Offset of the grid center from voxel index 0, i.e. (L - 1) / 2.
    [[nodiscard]] double center() const noexcept { return 0.5 * (m_side - 1); }

    [[nodiscard]] double norm_squared() const;
    [[nodiscard]] double total_mass() const;

    bool operator==(const Volume& other) const {
        return m_side == other.m_side && m_data == other.m_data;
    }

private:
    int m_side = 0;
    std::vector<double> m_data;
    std::optional<double> m_voxel_size;
};

struct GaussianBlob {
    Vec3 center = Vec3::Zero(); // voxel units, relative to the grid center
    Mat3 covariance = Mat3::Identity();
    double weight = 1.0;
};

struct SynthSpec {
    int side = 64;
    std::vector<GaussianBlob> blobs;
    std::uint64_t seed = 0;
    // Rejects blob sets that are rotationally degenerate (fewer than three
    // non-collinear centers).
    bool require_asymmetric = false;
};

// Three anisotropic blobs with distinct weights and orientations; chiral and
// without rotational symmetry. Blob centers are weighted to a zero mean so
// the density's center of mass sits at the grid center.
SynthSpec reference_synth_spec(int side = 64);

// Random anisotropic blobs drawn from `seed`; centers within 0.2 L of the grid center.
SynthSpec random_synth_spec(int side, int blob_count, std::uint64_t seed);

Volume synth_volume(const SynthSpec& spec);

// Fourier cropping to side `target`, rescaled so constants are preserved.
Volume downsample(const Volume& v, int target);

// out(x) = v(R x) by trilinear interpolation about the grid center, 0 outside.
Volume rotate(const Volume& v, const Rotation& r);

// out(x) = v(x - t): content moves by +t voxels. Integer shifts are exact.
Volume shift(const Volume& v, const Vec3& t);

// Mirror x -> -x about the grid center.
Volume reflect(const Volume& v);

// Mass-weighted mean position after clamping values below `threshold` to 0.
// Throws DegenerateVolumeError when no mass remains.
Vec3 center_of_mass(const Volume& v, double threshold = 0.0);

inline constexpr double kNoiseFree = std::numeric_limits<double>::infinity();

// Gaussian noise with variance |v|^2 / (L^3 snr); snr == kNoiseFree returns v.
Volume add_noise(const Volume& v, double snr, std::uint64_t seed);
double noise_variance(const Volume& v, double snr);

double l2_distance(const Volume& a, const Volume& b);
double dot(const Volume& a, const Volume& b);

} // namespace volalign
