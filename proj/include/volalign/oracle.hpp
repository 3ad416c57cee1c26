#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "volalign/optimizer.hpp"
#include "volalign/so3.hpp"
#include "volalign/volume.hpp"
#include "volalign/wemd.hpp"

// Verification machinery kept independent of the code paths it checks:
// nothing here calls the surrogate, the descent solver, exp_map or dwt3.
namespace volalign::oracle {

struct RotationGrid {
    std::vector<Rotation> rotations;
    double covering_radius_deg = 0.0;
};

// Axis-angle lattice (Fibonacci-sphere axes x uniform angles) with empirical
// covering radius at most `delta_deg`. Contains the identity. Refuses
// delta_deg < 5 with ArgumentError.
RotationGrid build_grid(double delta_deg);

// Largest distance, over `probes` Haar-random rotations, to the nearest grid point.
double empirical_covering_radius(const RotationGrid& grid, int probes, std::uint64_t seed);

struct GridSearchResult {
    Rotation rotation;
    double loss = 0.0;
    std::size_t index = 0;
};

// Exact argmin over the grid, earliest index on ties. Throws EvaluationError
// on a non-finite loss.
GridSearchResult grid_search_align(const RotationLoss& loss, const RotationGrid& grid);

using MatrixFunction = std::function<double(const Mat3&)>;

// Central differences in each of the 9 ambient coordinates; h in [1e-7, 1e-3].
Mat3 finite_diff_gradient(const MatrixFunction& f, const Mat3& x, double h);

// Haar sample built from a uniform axis and an angle drawn by rejection from
// the density (1 - cos t) / pi on [0, pi].
Rotation haar_axis_angle_sample(std::mt19937_64& rng);

// Separable DWT assembled from a standalone 1D transform applied line by line
// along x, then y, then z.
WaveletDecomposition dwt3_by_lines(const Volume& v, int levels, const WaveletFilter& filter);
// Full-length symmetric-extension convolution with stride-2 decimation.
std::vector<double> dwt1d(const std::vector<double>& x, const std::vector<double>& taps);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

} // namespace volalign::oracle
