#include "volalign/volume.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <random>
#include <string>

#include <fftw3.h>

#include "volalign/error.hpp"

namespace volalign {

namespace {

// The FFTW planner is not reentrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class FftwBuffer {
public:
    explicit FftwBuffer(std::size_t n)
        : m_data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
        if (m_data == nullptr)
            throw NumericalError("fftw_malloc failed");
    }
    ~FftwBuffer() { fftw_free(m_data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    fftw_complex* get() noexcept { return m_data; }
    std::complex<double>& operator[](std::size_t i) noexcept {
        return reinterpret_cast<std::complex<double>*>(m_data)[i];
    }

private:
    fftw_complex* m_data;
};

void execute_dft_3d(int n, FftwBuffer& in, FftwBuffer& out, int sign) {
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_3d(n, n, n, in.get(), out.get(), sign, FFTW_ESTIMATE);
    }
    if (plan == nullptr)
        throw NumericalError("FFTW planning failed");
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

void require_same_side(const Volume& a, const Volume& b) {
    if (a.side() != b.side())
        throw DimensionError("volume size mismatch: " + std::to_string(a.side()) + " vs " +
                             std::to_string(b.side()));
}

// Trilinear sample at fractional index coordinates; neighbours outside the grid read as 0.
double sample_trilinear(const Volume& v, double x, double y, double z) {
    const int n = v.side();
    if (!(x > -1.0 && y > -1.0 && z > -1.0 && x < n && y < n && z < n))
        return 0.0;
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const double fz = std::floor(z);
    const int i0 = static_cast<int>(fx);
    const int j0 = static_cast<int>(fy);
    const int k0 = static_cast<int>(fz);
    const double tx = x - fx;
    const double ty = y - fy;
    const double tz = z - fz;
    const auto data = v.data();

    if (i0 >= 0 && j0 >= 0 && k0 >= 0 && i0 + 1 < n && j0 + 1 < n && k0 + 1 < n) {
        const std::size_t base = v.index(i0, j0, k0);
        const auto sy = static_cast<std::size_t>(n);
        const std::size_t sz = sy * sy;
        const double c00 = data[base] * (1 - tx) + data[base + 1] * tx;
        const double c10 = data[base + sy] * (1 - tx) + data[base + sy + 1] * tx;
        const double c01 = data[base + sz] * (1 - tx) + data[base + sz + 1] * tx;
        const double c11 = data[base + sz + sy] * (1 - tx) + data[base + sz + sy + 1] * tx;
        const double c0 = c00 * (1 - ty) + c10 * ty;
        const double c1 = c01 * (1 - ty) + c11 * ty;
        return c0 * (1 - tz) + c1 * tz;
    }

    auto at = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
            return 0.0;
        return data[v.index(i, j, k)];
    };
    const double c00 = at(i0, j0, k0) * (1 - tx) + at(i0 + 1, j0, k0) * tx;
    const double c10 = at(i0, j0 + 1, k0) * (1 - tx) + at(i0 + 1, j0 + 1, k0) * tx;
    const double c01 = at(i0, j0, k0 + 1) * (1 - tx) + at(i0 + 1, j0, k0 + 1) * tx;
    const double c11 = at(i0, j0 + 1, k0 + 1) * (1 - tx) + at(i0 + 1, j0 + 1, k0 + 1) * tx;
    const double c0 = c00 * (1 - ty) + c10 * ty;
    const double c1 = c01 * (1 - ty) + c11 * ty;
    return c0 * (1 - tz) + c1 * tz;
}

Mat3 blob_axes(const Vec3& sigmas, const Vec3& axis_angle) {
    const Mat3 r = exp_map(axis_angle).matrix();
    return r * sigmas.cwiseAbs2().asDiagonal() * r.transpose();
}

} // namespace

Volume::Volume(int side, std::vector<double> data, std::optional<double> voxel_size)
    : m_side(side), m_data(std::move(data)), m_voxel_size(voxel_size) {
    if (side <= 0)
        throw ArgumentError("volume side length must be positive");
    const auto l = static_cast<std::size_t>(side);
    if (m_data.size() != l * l * l)
        throw ArgumentError("volume data length " + std::to_string(m_data.size()) +
                            " does not equal side^3 = " + std::to_string(l * l * l));
    for (double x : m_data)
        if (!std::isfinite(x))
            throw ArgumentError("volume contains non-finite values");
    if (voxel_size && !(*voxel_size > 0.0))
        throw ArgumentError("voxel size must be positive");
}

Volume Volume::zeros(int side, std::optional<double> voxel_size) {
    const auto l = static_cast<std::size_t>(side > 0 ? side : 0);
    return Volume(side, std::vector<double>(l * l * l, 0.0), voxel_size);
}

double Volume::norm_squared() const {
    return std::inner_product(m_data.begin(), m_data.end(), m_data.begin(), 0.0);
}

double Volume::total_mass() const {
    return std::accumulate(m_data.begin(), m_data.end(), 0.0);
}

SynthSpec reference_synth_spec(int side) {
    const double s = side / 64.0;
    SynthSpec spec;
    spec.side = side;
    spec.require_asymmetric = true;
    // Weights are set from peak amplitudes, giving a cryo-EM-like value range.
    auto blob = [s](const Vec3& center, const Vec3& sigmas, const Vec3& orientation, double peak) {
        const Mat3 cov = blob_axes(sigmas * s, orientation);
        return GaussianBlob{center * s, cov, peak * std::sqrt(std::pow(2.0 * kPi, 3) * cov.determinant())};
    };
    spec.blobs = {
        blob(Vec3(-7.78, 7.08, -3.13), Vec3(4.14, 5.12, 3.54), Vec3(-0.783, 1.193, -1.376), 0.523),
        blob(Vec3(3.81, 7.45, -11.22), Vec3(3.49, 3.35, 2.30), Vec3(-0.049, -0.327, -0.760), 0.790),
        blob(Vec3(12.09, 6.60, 2.90), Vec3(4.33, 4.74, 2.34), Vec3(-0.093, -0.461, -0.888), 0.942),
    };
    Vec3 mean = Vec3::Zero();
    double total = 0.0;
    for (const auto& b : spec.blobs) {
        mean += b.weight * b.center;
        total += b.weight;
    }
    mean /= total;
    for (auto& b : spec.blobs)
        b.center -= mean;
    return spec;
}

SynthSpec random_synth_spec(int side, int blob_count, std::uint64_t seed) {
    if (blob_count < 1)
        throw ArgumentError("blob count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> width(0.04, 0.08);
    std::uniform_real_distribution<double> weight(0.4, 1.0);
    SynthSpec spec;
    spec.side = side;
    spec.seed = seed;
    spec.require_asymmetric = blob_count >= 3;
    for (int b = 0; b < blob_count; ++b) {
        const Vec3 center = Vec3(unit(rng), unit(rng), unit(rng)) * 0.2 * side;
        const Vec3 sigmas = Vec3(width(rng), width(rng), width(rng)) * side;
        const Vec3 orientation(unit(rng), unit(rng), unit(rng));
        spec.blobs.push_back({center, blob_axes(sigmas, orientation), weight(rng)});
    }
    return spec;
}

Volume synth_volume(const SynthSpec& spec) {
    if (spec.side < 1)
        throw ArgumentError("synthetic volume side length must be positive");
    if (spec.blobs.empty())
        throw ArgumentError("synthetic volume needs at least one blob");

    struct Prepared {
        Vec3 center;
        Mat3 precision;
        double scale;
    };
    std::vector<Prepared> prepared;
    for (const auto& b : spec.blobs) {
        if (!(b.weight > 0.0))
            throw ArgumentError("blob weight must be positive");
        if (!b.covariance.isApprox(b.covariance.transpose(), 1e-12))
            throw ArgumentError("blob covariance is not symmetric");
        Eigen::LLT<Mat3> llt(b.covariance);
        if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0))
            throw ArgumentError("blob covariance is not positive definite");
        const double det = b.covariance.determinant();
        const double norm = 1.0 / std::sqrt(std::pow(2.0 * kPi, 3) * det);
        prepared.push_back({b.center, b.covariance.inverse(), b.weight * norm});
    }

    if (spec.require_asymmetric) {
        bool non_collinear = false;
        const auto n = spec.blobs.size();
        for (std::size_t a = 0; a < n && !non_collinear; ++a)
            for (std::size_t b = a + 1; b < n && !non_collinear; ++b)
                for (std::size_t c = b + 1; c < n && !non_collinear; ++c) {
                    const Vec3 u = spec.blobs[b].center - spec.blobs[a].center;
                    const Vec3 w = spec.blobs[c].center - spec.blobs[a].center;
                    non_collinear = u.cross(w).norm() > 1e-6 * std::max(1.0, u.norm() * w.norm());
                }
        if (!non_collinear)
            throw ArgumentError("asymmetric volume requires at least 3 non-collinear blob centers");
    }

    Volume out = Volume::zeros(spec.side);
    const double c = out.center();
    for (int k = 0; k < spec.side; ++k)
        for (int j = 0; j < spec.side; ++j)
            for (int i = 0; i < spec.side; ++i) {
                const Vec3 p(i - c, j - c, k - c);
                double value = 0.0;
                for (const auto& b : prepared) {
                    const Vec3 d = p - b.center;
                    value += b.scale * std::exp(-0.5 * d.dot(b.precision * d));
                }
                out(i, j, k) = value;
            }
    return out;
}

Volume downsample(const Volume& v, int target) {
    const int n = v.side();
    if (target > n)
        throw ArgumentError("downsample target " + std::to_string(target) + " exceeds side " +
                            std::to_string(n));
    if (target < 4)
        throw ArgumentError("downsample target must be at least 4");
    if ((target - n) % 2 != 0)
        throw ArgumentError("downsample requires side and target of equal parity");
    if (target == n)
        return v;

    const auto big = static_cast<std::size_t>(n);
    const auto small = static_cast<std::size_t>(target);
    FftwBuffer spatial(big * big * big);
    FftwBuffer spectrum(big * big * big);
    const auto data = v.data();
    for (std::size_t i = 0; i < data.size(); ++i)
        spatial[i] = data[i];
    execute_dft_3d(n, spatial, spectrum, FFTW_FORWARD);

    // New samples land at old index m * r + (r - 1) / 2, which keeps the grid
    // centers aligned; the phase ramp implements that sub-voxel offset.
    const double ratio = static_cast<double>(n) / target;
    const double offset = 0.5 * (ratio - 1.0);
    std::vector<int> signed_freq(small);
    std::vector<std::size_t> source(small);
    std::vector<std::complex<double>> phase(small);
    for (std::size_t a = 0; a < small; ++a) {
        const int f = static_cast<int>(a) < (target + 1) / 2 ? static_cast<int>(a)
                                                             : static_cast<int>(a) - target;
        signed_freq[a] = f;
        source[a] = static_cast<std::size_t>((f + n) % n);
        phase[a] = std::polar(1.0, 2.0 * kPi * f * offset / n);
    }

    FftwBuffer cropped(small * small * small);
    FftwBuffer result(small * small * small);
    for (std::size_t c = 0; c < small; ++c)
        for (std::size_t b = 0; b < small; ++b)
            for (std::size_t a = 0; a < small; ++a) {
                const std::size_t src = source[a] + big * (source[b] + big * source[c]);
                cropped[a + small * (b + small * c)] =
                    spectrum[src] * phase[a] * phase[b] * phase[c];
            }
    execute_dft_3d(target, cropped, result, FFTW_BACKWARD);

    const double scale = 1.0 / (static_cast<double>(big) * static_cast<double>(big) * static_cast<double>(big));
    std::vector<double> out(small * small * small);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = result[i].real() * scale;
    std::optional<double> voxel = v.voxel_size();
    if (voxel)
        *voxel *= ratio;
    return Volume(target, std::move(out), voxel);
}

Volume rotate(const Volume& v, const Rotation& r) {
    const int n = v.side();
    const double c = v.center();
    const Mat3& m = r.matrix();
    Volume out = Volume::zeros(n, v.voxel_size());
    for (int k = 0; k < n; ++k) {
        const double pz = k - c;
        for (int j = 0; j < n; ++j) {
            const double py = j - c;
            const Vec3 base = m.col(1) * py + m.col(2) * pz;
            for (int i = 0; i < n; ++i) {
                const double px = i - c;
                const double x = m(0, 0) * px + base.x() + c;
                const double y = m(1, 0) * px + base.y() + c;
                const double z = m(2, 0) * px + base.z() + c;
                out(i, j, k) = sample_trilinear(v, x, y, z);
            }
        }
    }
    return out;
}

Volume shift(const Volume& v, const Vec3& t) {
    const int n = v.side();
    Volume out = Volume::zeros(n, v.voxel_size());
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                out(i, j, k) = sample_trilinear(v, i - t.x(), j - t.y(), k - t.z());
    return out;
}

Volume reflect(const Volume& v) {
    const int n = v.side();
    Volume out = Volume::zeros(n, v.voxel_size());
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                out(i, j, k) = v(n - 1 - i, j, k);
    return out;
}

Vec3 center_of_mass(const Volume& v, double threshold) {
    const int n = v.side();
    const double c = v.center();
    double mass = 0.0;
    Vec3 moment = Vec3::Zero();
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double w = v(i, j, k);
                if (w < threshold)
                    continue;
                mass += w;
                moment += w * Vec3(i - c, j - c, k - c);
            }
    if (!(mass > 0.0))
        throw DegenerateVolumeError("volume has no mass above threshold " + std::to_string(threshold));
    return moment / mass;
}

double noise_variance(const Volume& v, double snr) {
    if (!(snr > 0.0))
        throw ArgumentError("SNR must be positive");
    if (std::isinf(snr))
        return 0.0;
    const double voxels = static_cast<double>(v.size());
    return v.norm_squared() / (voxels * snr);
}

Volume add_noise(const Volume& v, double snr, std::uint64_t seed) {
    const double variance = noise_variance(v, snr);
    if (variance == 0.0)
        return v;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(variance));
    Volume out = v;
    for (double& x : out.data())
        x += normal(rng);
    return out;
}

double dot(const Volume& a, const Volume& b) {
    require_same_side(a, b);
    const auto x = a.data();
    const auto y = b.data();
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

double l2_distance(const Volume& a, const Volume& b) {
    require_same_side(a, b);
    const auto x = a.data();
    const auto y = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

} // namespace volalign
