#include "volalign/wemd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "volalign/error.hpp"

namespace volalign {

namespace {

// Half-sample symmetric extension: x[-1] = x[0], x[n] = x[n-1].
int reflect_index(int i, int n) {
    const int period = 2 * n;
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - 1 - i;
}

struct Block {
    std::array<int, 3> shape{};
    std::vector<double> data;
};

// Splits `in` along `axis` into lowpass and highpass halves.
std::array<Block, 2> analyze_axis(const Block& in, int axis, const WaveletFilter& filter) {
    const int flen = static_cast<int>(filter.lowpass.size());
    const int n = in.shape[static_cast<std::size_t>(axis)];
    const int m = dwt_output_length(n, flen);
    std::array<Block, 2> out;
    for (auto& b : out) {
        b.shape = in.shape;
        b.shape[static_cast<std::size_t>(axis)] = m;
        b.data.assign(static_cast<std::size_t>(b.shape[0]) * b.shape[1] * b.shape[2], 0.0);
    }

    const std::array<std::ptrdiff_t, 3> in_strides{1, in.shape[0],
                                                   static_cast<std::ptrdiff_t>(in.shape[0]) * in.shape[1]};
    const auto& os = out[0].shape;
    const std::array<std::ptrdiff_t, 3> out_strides{1, os[0], static_cast<std::ptrdiff_t>(os[0]) * os[1]};
    const auto a = static_cast<std::size_t>(axis);
    const std::size_t u_axis = a == 0 ? 1 : 0;
    const std::size_t v_axis = a == 2 ? 1 : 2;

    for (int v = 0; v < in.shape[v_axis]; ++v)
        for (int u = 0; u < in.shape[u_axis]; ++u) {
            const std::ptrdiff_t in_base = u * in_strides[u_axis] + v * in_strides[v_axis];
            const std::ptrdiff_t out_base = u * out_strides[u_axis] + v * out_strides[v_axis];
            analyze_line(in.data.data() + in_base, n, in_strides[a], filter,
                         out[0].data.data() + out_base, out[1].data.data() + out_base, out_strides[a]);
        }
    return out;
}

} // namespace

WaveletFilter WaveletFilter::sym3() {
    return from_lowpass("sym3", {0.035226291882100656, -0.08544127388224149, -0.13501102001039084,
                                 0.4598775021193313, 0.8068915093133388, 0.3326705529509569});
}

WaveletFilter WaveletFilter::from_lowpass(std::string name, std::vector<double> lowpass) {
    const std::size_t n = lowpass.size();
    if (n < 2 || n % 2 != 0)
        throw ArgumentError("wavelet lowpass filter needs an even number of taps");
    std::vector<double> highpass(n);
    for (std::size_t k = 0; k < n; ++k)
        highpass[k] = (k % 2 == 0 ? -1.0 : 1.0) * lowpass[n - 1 - k];
    return {std::move(name), std::move(lowpass), std::move(highpass)};
}

int max_wavelet_levels(int side) {
    if (side < 1)
        return 0;
    return std::bit_width(static_cast<unsigned>(side)) - 1 - 1;
}

int default_wavelet_levels(int side) {
    return std::min(6, max_wavelet_levels(side));
}

void analyze_line(const double* in, int n, std::ptrdiff_t stride, const WaveletFilter& filter,
                  double* low, double* high, std::ptrdiff_t out_stride) {
    const int flen = static_cast<int>(filter.lowpass.size());
    const int m = dwt_output_length(n, flen);
    const double* lo = filter.lowpass.data();
    const double* hi = filter.highpass.data();
    for (int k = 0; k < m; ++k) {
        const int top = 2 * k + 1;
        double acc_lo = 0.0;
        double acc_hi = 0.0;
        if (top - (flen - 1) >= 0 && top < n) {
            for (int j = 0; j < flen; ++j) {
                const double x = in[(top - j) * stride];
                acc_lo += lo[j] * x;
                acc_hi += hi[j] * x;
            }
        } else {
            for (int j = 0; j < flen; ++j) {
                const double x = in[reflect_index(top - j, n) * stride];
                acc_lo += lo[j] * x;
                acc_hi += hi[j] * x;
            }
        }
        low[k * out_stride] = acc_lo;
        high[k * out_stride] = acc_hi;
    }
}

WaveletDecomposition dwt3(const Volume& v, int levels, const WaveletFilter& filter) {
    if (levels < 1)
        throw ArgumentError("wavelet level count must be at least 1");
    const int admissible = max_wavelet_levels(v.side());
    if (admissible < 1)
        throw ArgumentError("volume side " + std::to_string(v.side()) + " is too small for a wavelet transform");

    WaveletDecomposition out;
    out.clamped = levels > admissible;
    out.levels = std::min(levels, admissible);

    Block current{{v.side(), v.side(), v.side()}, std::vector<double>(v.data().begin(), v.data().end())};
    for (int level = 1; level <= out.levels; ++level) {
        std::array<Block, 8> bands;
        const auto x_split = analyze_axis(current, 0, filter);
        for (int bx = 0; bx < 2; ++bx) {
            const auto y_split = analyze_axis(x_split[static_cast<std::size_t>(bx)], 1, filter);
            for (int by = 0; by < 2; ++by) {
                auto z_split = analyze_axis(y_split[static_cast<std::size_t>(by)], 2, filter);
                for (int bz = 0; bz < 2; ++bz)
                    bands[static_cast<std::size_t>(bx | (by << 1) | (bz << 2))] =
                        std::move(z_split[static_cast<std::size_t>(bz)]);
            }
        }
        for (int code = 1; code < 8; ++code) {
            auto& b = bands[static_cast<std::size_t>(code)];
            out.details.push_back({level, code, b.shape, std::move(b.data)});
        }
        current = std::move(bands[0]);
    }
    out.approximation = {out.levels, 0, current.shape, std::move(current.data)};
    return out;
}

double wemd_scale_weight(int level, int levels) {
    return std::pow(2.0, -2.5 * (levels - level));
}

WemdEmbedding wemd_embed(const Volume& v, int levels, const WaveletFilter& filter) {
    const WaveletDecomposition dec = dwt3(v, levels, filter);
    WemdEmbedding emb;
    emb.levels = dec.levels;
    emb.clamped = dec.clamped;
    emb.side = v.side();

    std::size_t total = dec.approximation.coefficients.size();
    for (const auto& band : dec.details)
        total += band.coefficients.size();
    emb.coefficients.reserve(total);

    int current_level = 0;
    for (const auto& band : dec.details) {
        if (band.level != current_level) {
            emb.level_offsets.push_back(emb.coefficients.size());
            current_level = band.level;
        }
        const double w = wemd_scale_weight(band.level, dec.levels);
        for (double c : band.coefficients)
            emb.coefficients.push_back(w * c);
    }
    emb.level_offsets.push_back(emb.coefficients.size());
    const double w = wemd_scale_weight(dec.levels, dec.levels);
    for (double c : dec.approximation.coefficients)
        emb.coefficients.push_back(w * c);
    return emb;
}

double wemd_distance(const WemdEmbedding& a, const WemdEmbedding& b) {
    if (a.side != b.side || a.levels != b.levels || a.coefficients.size() != b.coefficients.size())
        throw DimensionError("WEMD embeddings have different layouts");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.coefficients.size(); ++i)
        sum += std::abs(a.coefficients[i] - b.coefficients[i]);
    return sum;
}

double wemd_distance(const Volume& a, const Volume& b, int levels, const WaveletFilter& filter) {
    if (a.side() != b.side())
        throw DimensionError("volume size mismatch: " + std::to_string(a.side()) + " vs " +
                             std::to_string(b.side()));
    return wemd_distance(wemd_embed(a, levels, filter), wemd_embed(b, levels, filter));
}

} // namespace volalign
