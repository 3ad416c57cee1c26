#include "volalign/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "volalign/error.hpp"

namespace volalign::oracle {

namespace {

// Shell spacing and per-shell axis spacing, as fractions of the requested radius.
constexpr double kAngleStepFactor = 1.0;
constexpr double kAxisFactor = 0.5;

Mat3 rodrigues(const Vec3& axis, double angle) {
    Mat3 k;
    k << 0.0, -axis.z(), axis.y(),
         axis.z(), 0.0, -axis.x(),
         -axis.y(), axis.x(), 0.0;
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

double trace_product(const Mat3& a, const Mat3& b) {
    // tr(A B^T) without forming the product.
    return (a.array() * b.array()).sum();
}

std::vector<Vec3> fibonacci_sphere(int n) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return out;
}

int reflect_index(int i, int n) {
    while (i < 0 || i >= n)
        i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
}

std::vector<double> line(const std::vector<double>& data, std::array<int, 3> shape, int axis, int u, int v) {
    const int n = shape[static_cast<std::size_t>(axis)];
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        std::array<int, 3> idx{};
        idx[static_cast<std::size_t>(axis)] = t;
        idx[static_cast<std::size_t>(axis == 0 ? 1 : 0)] = u;
        idx[static_cast<std::size_t>(axis == 2 ? 1 : 2)] = v;
        out[static_cast<std::size_t>(t)] = data[static_cast<std::size_t>(idx[0] + shape[0] * (idx[1] + shape[1] * idx[2]))];
    }
    return out;
}

struct Array3 {
    std::array<int, 3> shape{};
    std::vector<double> data;
};

Array3 filter_axis(const Array3& in, int axis, const std::vector<double>& taps) {
    const int flen = static_cast<int>(taps.size());
    Array3 out;
    out.shape = in.shape;
    out.shape[static_cast<std::size_t>(axis)] = (in.shape[static_cast<std::size_t>(axis)] + flen - 1) / 2;
    out.data.assign(static_cast<std::size_t>(out.shape[0] * out.shape[1] * out.shape[2]), 0.0);
    const int nu = in.shape[static_cast<std::size_t>(axis == 0 ? 1 : 0)];
    const int nv = in.shape[static_cast<std::size_t>(axis == 2 ? 1 : 2)];
    for (int v = 0; v < nv; ++v)
        for (int u = 0; u < nu; ++u) {
            const std::vector<double> coeffs = dwt1d(line(in.data, in.shape, axis, u, v), taps);
            for (int t = 0; t < static_cast<int>(coeffs.size()); ++t) {
                std::array<int, 3> idx{};
                idx[static_cast<std::size_t>(axis)] = t;
                idx[static_cast<std::size_t>(axis == 0 ? 1 : 0)] = u;
                idx[static_cast<std::size_t>(axis == 2 ? 1 : 2)] = v;
                out.data[static_cast<std::size_t>(idx[0] + out.shape[0] * (idx[1] + out.shape[1] * idx[2]))] =
                    coeffs[static_cast<std::size_t>(t)];
            }
        }
    return out;
}

double kolmogorov_survival(double lambda) {
    if (lambda < 1e-3)
        return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-16)
            break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace

RotationGrid build_grid(double delta_deg) {
    if (!(delta_deg >= 5.0))
        throw ArgumentError("rotation grid radius must be at least 5 degrees");

    RotationGrid grid;
    grid.covering_radius_deg = delta_deg;
    grid.rotations.push_back(Rotation::identity());

    const int shells = static_cast<int>(std::ceil(180.0 / (kAngleStepFactor * delta_deg)));
    const double axis_radius = deg_to_rad(kAxisFactor * delta_deg);
    for (int m = 1; m <= shells; ++m) {
        const double angle = kPi * m / shells;
        const double rho = axis_radius / (2.0 * std::sin(angle / 2.0));
        const int axes = std::max(1, static_cast<int>(std::ceil(2.0 * kPi / (rho * rho))));
        for (const Vec3& axis : fibonacci_sphere(axes))
            grid.rotations.emplace_back(rodrigues(axis, angle));
    }
    return grid;
}

double empirical_covering_radius(const RotationGrid& grid, int probes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst_trace = std::numeric_limits<double>::infinity();
    for (int p = 0; p < probes; ++p) {
        const Mat3 probe = haar_axis_angle_sample(rng).matrix();
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& r : grid.rotations)
            best = std::max(best, trace_product(probe, r.matrix()));
        worst_trace = std::min(worst_trace, best);
    }
    return rad_to_deg(std::acos(std::clamp((worst_trace - 1.0) / 2.0, -1.0, 1.0)));
}

GridSearchResult grid_search_align(const RotationLoss& loss, const RotationGrid& grid) {
    if (grid.rotations.empty())
        throw ArgumentError("empty rotation grid");
    GridSearchResult best{grid.rotations.front(), std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < grid.rotations.size(); ++i) {
        const double value = loss(grid.rotations[i]);
        if (!std::isfinite(value))
            throw EvaluationError("loss returned a non-finite value at grid point " + std::to_string(i));
        if (value < best.loss)
            best = {grid.rotations[i], value, i};
    }
    return best;
}

Mat3 finite_diff_gradient(const MatrixFunction& f, const Mat3& x, double h) {
    if (!(h >= 1e-7 && h <= 1e-3))
        throw ArgumentError("finite-difference step must lie in [1e-7, 1e-3]");
    Mat3 grad;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Mat3 plus = x;
            Mat3 minus = x;
            plus(i, j) += h;
            minus(i, j) -= h;
            grad(i, j) = (f(plus) - f(minus)) / (2.0 * h);
        }
    return grad;
}

Rotation haar_axis_angle_sample(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vec3 axis;
    do {
        axis = Vec3(normal(rng), normal(rng), normal(rng));
    } while (axis.norm() < 1e-12);
    axis.normalize();
    for (;;) {
        const double angle = kPi * uniform(rng);
        if (2.0 * uniform(rng) <= 1.0 - std::cos(angle))
            return Rotation(rodrigues(axis, angle));
    }
}

std::vector<double> dwt1d(const std::vector<double>& x, const std::vector<double>& taps) {
    const int n = static_cast<int>(x.size());
    const int flen = static_cast<int>(taps.size());
    const int m = (n + flen - 1) / 2;
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    for (int k = 0; k < m; ++k) {
        double acc = 0.0;
        for (int j = 0; j < flen; ++j)
            acc += taps[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(reflect_index(2 * k + 1 - j, n))];
        out[static_cast<std::size_t>(k)] = acc;
    }
    return out;
}

WaveletDecomposition dwt3_by_lines(const Volume& v, int levels, const WaveletFilter& filter) {
    WaveletDecomposition out;
    out.levels = levels;
    Array3 current{{v.side(), v.side(), v.side()}, std::vector<double>(v.data().begin(), v.data().end())};
    for (int level = 1; level <= levels; ++level) {
        std::array<Array3, 8> bands;
        for (int code = 0; code < 8; ++code) {
            Array3 a = current;
            for (int axis = 0; axis < 3; ++axis)
                a = filter_axis(a, axis, (code >> axis) & 1 ? filter.highpass : filter.lowpass);
            bands[static_cast<std::size_t>(code)] = std::move(a);
        }
        for (int code = 1; code < 8; ++code)
            out.details.push_back({level, code, bands[static_cast<std::size_t>(code)].shape,
                                   bands[static_cast<std::size_t>(code)].data});
        current = std::move(bands[0]);
    }
    out.approximation = {levels, 0, current.shape, current.data};
    return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw ArgumentError("KS test needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    return {d, kolmogorov_survival(lambda)};
}

} // namespace volalign::oracle
