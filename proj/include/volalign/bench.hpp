#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "volalign/pipeline.hpp"

namespace volalign {

// One synthetic alignment problem: v2 = shift(rotate(v1', R), t) with v1' =
// reflect(v1) when `reflect` is set, plus optional noise on both maps.
struct SyntheticPair {
    Volume v1;
    Volume v2;
    GroundTruth truth;
};

struct SyntheticOptions {
    double shift_scale = 0.05; // |t|_inf <= shift_scale * L
    double snr = kNoiseFree;
    bool reflect = false;
};

// Deterministic in (reference, options, seed). R is Haar-uniform and t is
// uniform in the cube [-S, S]^3 with S = shift_scale * L.
SyntheticPair make_synthetic_pair(const Volume& reference, const SyntheticOptions& options, std::uint64_t seed);

struct BenchConfig {
    int side = 64;
    int blobs = 0; // 0 uses the reference three-blob volume
    std::vector<int> downsample{32};
    std::vector<int> iterations{200};
    std::vector<LossKind> losses{LossKind::Wemd};
    std::vector<double> snrs{kNoiseFree};
    int trials = 50;
    int jobs = 1;
    std::uint64_t seed = 0;
    double shift_scale = 0.05;
    bool refine = true;
    bool handedness = false;
    bool reflect = false;
    double threshold = 0.0;
    int wavelet_levels = 0;
    std::optional<double> lengthscale;
};

struct BenchRow {
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Wemd;
    int downsample = 0;
    int iterations = 0;
    double snr = kNoiseFree;
    std::optional<double> error_deg_pre;
    std::optional<double> error_deg_post;
    std::optional<double> translation_error;
    std::optional<bool> reflection_correct;
    double seconds = 0.0;
    std::string status = "ok";
};

// Runs trials x cells on a pool of cfg.jobs threads. Rows come back in a
// fixed order regardless of scheduling. Throws ArgumentError for an empty
// trial matrix.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

std::string bench_csv(const std::vector<BenchRow>& rows);
// Median and quartiles of the errors per (loss, L0, T, SNR) cell.
nlohmann::json bench_summary(const std::vector<BenchRow>& rows);

std::string format_snr(double snr);

} // namespace volalign
