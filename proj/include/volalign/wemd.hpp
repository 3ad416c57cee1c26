#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "volalign/volume.hpp"

namespace volalign {

// Orthonormal analysis filter pair, in the convolution order used by PyWavelets.
struct WaveletFilter {
    std::string name;
    std::vector<double> lowpass;
    std::vector<double> highpass;

    static WaveletFilter sym3();
    // Builds the quadrature mirror highpass from `lowpass`.
    static WaveletFilter from_lowpass(std::string name, std::vector<double> lowpass);
};

// Largest level count keeping the coarsest band at least 4 samples wide:
// floor(log2 L) - 1.
int max_wavelet_levels(int side);
// min(6, max_wavelet_levels(side)).
int default_wavelet_levels(int side);

// Length of one analysis output for an input of length n (symmetric extension).
inline int dwt_output_length(int n, int filter_length) { return (n + filter_length - 1) / 2; }

// One separable subband. `code` holds the filter choice per axis: bit 0 for x,
// bit 1 for y, bit 2 for z; a set bit means highpass. Code 0 is the
// approximation (LLL).
struct Subband {
    int level = 0; // 1 is the finest scale
    int code = 0;
    std::array<int, 3> shape{};
    std::vector<double> coefficients; // x fastest
};

struct WaveletDecomposition {
    int levels = 0;
    bool clamped = false;           // requested level count exceeded the admissible maximum
    std::vector<Subband> details;   // ordered by level, then by code 1..7
    Subband approximation;          // at level `levels`
};

// Separable 3D DWT with symmetric (half-sample) boundary extension. A level
// count above max_wavelet_levels is clamped and flagged rather than rejected.
WaveletDecomposition dwt3(const Volume& v, int levels, const WaveletFilter& filter);

// 1D analysis step along a single line; exposed for tests and the oracle.
void analyze_line(const double* in, int n, std::ptrdiff_t stride, const WaveletFilter& filter,
                  double* low, double* high, std::ptrdiff_t out_stride);

// Scale-weighted coefficient vector whose L1 differences give the wavelet
// earth mover's distance, weighted per band by wemd_scale_weight.
struct WemdEmbedding {
    std::vector<double> coefficients;
    int levels = 0;
    bool clamped = false;
    // Start of each level's detail block in `coefficients`; the final entry is
    // the start of the approximation block.
    std::vector<std::size_t> level_offsets;
    int side = 0;
};

// Weight 2^(-j(1 + n/2)) with n = 3, where j = levels - level counts scales down
// from the coarsest band (j = 0) to the finest (j = levels - 1). The
// approximation band shares the coarsest weight.
double wemd_scale_weight(int level, int levels);

WemdEmbedding wemd_embed(const Volume& v, int levels, const WaveletFilter& filter = WaveletFilter::sym3());

// L1 norm of the embedding difference. Throws DimensionError on layout mismatch.
double wemd_distance(const WemdEmbedding& a, const WemdEmbedding& b);
double wemd_distance(const Volume& a, const Volume& b, int levels,
                     const WaveletFilter& filter = WaveletFilter::sym3());

} // namespace volalign
