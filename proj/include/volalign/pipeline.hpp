#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "volalign/optimizer.hpp"
#include "volalign/so3.hpp"
#include "volalign/volume.hpp"
#include "volalign/wemd.hpp"

namespace volalign {

enum class LossKind { Wemd, L2, Custom };

std::string to_string(LossKind kind);
// Accepts "wemd", "l2" and "custom"; anything else throws ArgumentError.
LossKind parse_loss_kind(const std::string& name);

// Any distance between two equally sized volumes.
using VolumeDistance = std::function<double(const Volume&, const Volume&)>;

struct LossParams {
    int wavelet_levels = 0; // 0 selects default_wavelet_levels(side)
    WaveletFilter filter = WaveletFilter::sym3();
    VolumeDistance custom;  // required for LossKind::Custom
};

// R -> d(rotate(moving, R), fixed). The WEMD variant embeds `fixed` once.
// The returned closure owns copies of both volumes and is safe to call from
// several threads.
RotationLoss make_loss(const Volume& fixed, const Volume& moving, LossKind kind, const LossParams& params = {});

struct AlignOptions {
    int downsample = 32;
    int iterations = 200;
    LossKind loss = LossKind::Wemd;
    std::optional<double> lengthscale; // defaults: 0.75 for WEMD, 1.0 otherwise
    bool refine = true;
    int refine_downsample = 32;
    double refine_radius_deg = 5.0;
    bool handedness = false;
    int wavelet_levels = 0; // 0 selects the default for the working side length
    double threshold = 0.0; // center-of-mass threshold
    int inner_restarts = 1;
    std::uint64_t seed = 0;
    VolumeDistance custom_distance;

    [[nodiscard]] double effective_lengthscale() const;
    // Throws ArgumentError for settings incompatible with input side `side`.
    void validate(int side) const;
};

struct GroundTruth {
    Rotation rotation;
    Vec3 translation = Vec3::Zero();
    bool reflected = false;
};

struct StageTimes {
    double centering = 0.0;
    double bayesian_optimization = 0.0;
    double refinement = 0.0;
    double total = 0.0;
};

struct AlignmentReport {
    Rotation rotation_est;
    std::optional<Rotation> rotation_refined;
    Vec3 translation = Vec3::Zero(); // voxels, COM(v2) - COM(v1)
    bool reflected = false;
    LossKind loss_kind = LossKind::Wemd;
    BoTrace trace;
    std::optional<RefineResult> refinement;
    // Loss used to pick the handedness branch: refined L2 loss when refining,
    // otherwise the best BO loss. One entry per branch searched.
    std::vector<double> branch_losses;
    StageTimes times;
    std::optional<double> error_deg;       // final rotation vs ground truth
    std::optional<double> error_deg_est;   // BO estimate vs ground truth
    std::optional<double> translation_error_voxels;
    AlignOptions options;

    [[nodiscard]] const Rotation& final_rotation() const {
        return rotation_refined ? *rotation_refined : rotation_est;
    }
};

// COM(v2) - COM(v1) with values below `threshold` clamped to zero.
Vec3 recover_translation(const Volume& v1, const Volume& v2, double threshold = 0.0);

// Both volumes shifted so their centers of mass sit on the grid center.
struct CenteredPair {
    Volume v1;
    Volume v2;
    Vec3 translation = Vec3::Zero();
};
CenteredPair center_pair(const Volume& v1, const Volume& v2, double threshold = 0.0);

// Working-resolution copies used by one alignment stage; `moving` is the
// (possibly reflected) first volume, `fixed` the second.
struct StageVolumes {
    Volume moving;
    Volume fixed;
};
StageVolumes prepare_stage(const CenteredPair& pair, int side, bool reflect_moving);

// Self-alignment loss d(rotate(v, R), v) on a (beta, gamma) grid with
// R = R_z(gamma) R_y(beta), beta and gamma spanning [-90, 90] degrees.
struct Landscape {
    int grid = 0;
    std::vector<double> values; // beta fastest, normalized by the maximum
    // Points below half the maximum that are 4-connected to beta = gamma = 0.
    int basin_size = 0;
};
Landscape loss_landscape(const Volume& v, LossKind kind, int grid = 21, const LossParams& params = {});

// Median wall time of one loss evaluation at working side `side` over
// `evaluations` random rotations.
double median_loss_seconds(const Volume& v, int side, LossKind kind, int evaluations, std::uint64_t seed);

AlignmentReport align_volumes(const Volume& v1, const Volume& v2, const AlignOptions& options,
                              const std::optional<GroundTruth>& truth = std::nullopt);

} // namespace volalign
