#include "volalign/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <memory>
#include <string>

#include "volalign/error.hpp"

namespace volalign {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct BranchResult {
    bool reflected = false;
    BoResult bo;
    std::optional<RefineResult> refinement;
    double branch_loss = 0.0;
    double bo_seconds = 0.0;
    double refine_seconds = 0.0;
};

} // namespace

std::string to_string(LossKind kind) {
    switch (kind) {
    case LossKind::Wemd:
        return "wemd";
    case LossKind::L2:
        return "l2";
    case LossKind::Custom:
        return "custom";
    }
    return "unknown";
}

LossKind parse_loss_kind(const std::string& name) {
    if (name == "wemd")
        return LossKind::Wemd;
    if (name == "l2")
        return LossKind::L2;
    if (name == "custom")
        return LossKind::Custom;
    throw ArgumentError("unknown loss kind '" + name + "'");
}

RotationLoss make_loss(const Volume& fixed, const Volume& moving, LossKind kind, const LossParams& params) {
    if (fixed.side() != moving.side())
        throw DimensionError("loss volumes differ in size: " + std::to_string(fixed.side()) + " vs " +
                             std::to_string(moving.side()));
    auto moving_copy = std::make_shared<const Volume>(moving);
    switch (kind) {
    case LossKind::L2: {
        auto fixed_copy = std::make_shared<const Volume>(fixed);
        return [fixed_copy, moving_copy](const Rotation& r) {
            return l2_distance(rotate(*moving_copy, r), *fixed_copy);
        };
    }
    case LossKind::Wemd: {
        const int levels = params.wavelet_levels > 0 ? params.wavelet_levels : default_wavelet_levels(fixed.side());
        auto filter = std::make_shared<const WaveletFilter>(params.filter);
        auto fixed_embedding = std::make_shared<const WemdEmbedding>(wemd_embed(fixed, levels, *filter));
        return [fixed_embedding, moving_copy, filter, levels](const Rotation& r) {
            return wemd_distance(wemd_embed(rotate(*moving_copy, r), levels, *filter), *fixed_embedding);
        };
    }
    case LossKind::Custom: {
        if (!params.custom)
            throw ArgumentError("custom loss kind requires a distance function");
        auto fixed_copy = std::make_shared<const Volume>(fixed);
        VolumeDistance distance = params.custom;
        return [fixed_copy, moving_copy, distance](const Rotation& r) {
            return distance(rotate(*moving_copy, r), *fixed_copy);
        };
    }
    }
    throw ArgumentError("unknown loss kind");
}

double AlignOptions::effective_lengthscale() const {
    if (lengthscale)
        return *lengthscale;
    return loss == LossKind::Wemd ? 0.75 : 1.0;
}

void AlignOptions::validate(int side) const {
    auto check_level = [side](int level, const char* what) {
        if (level < 4 || level > side)
            throw ArgumentError(std::string(what) + " must lie in [4, " + std::to_string(side) + "]");
        if ((side - level) % 2 != 0)
            throw ArgumentError(std::string(what) + " must have the same parity as the input side length");
    };
    check_level(downsample, "downsample level");
    if (refine)
        check_level(refine_downsample, "refine downsample level");
    if (iterations < 1)
        throw ArgumentError("iteration count must be at least 1");
    if (!(refine_radius_deg > 0.0 && refine_radius_deg <= 30.0))
        throw ArgumentError("refine radius must lie in (0, 30] degrees");
    if (lengthscale && !(*lengthscale > 0.0))
        throw ArgumentError("lengthscale must be positive");
    if (wavelet_levels < 0)
        throw ArgumentError("wavelet level count must be nonnegative");
    if (inner_restarts < 1)
        throw ArgumentError("inner restarts must be at least 1");
    if (loss == LossKind::Custom && !custom_distance)
        throw ArgumentError("custom loss kind requires a distance function");
}

Vec3 recover_translation(const Volume& v1, const Volume& v2, double threshold) {
    return center_of_mass(v2, threshold) - center_of_mass(v1, threshold);
}

CenteredPair center_pair(const Volume& v1, const Volume& v2, double threshold) {
    if (v1.side() != v2.side())
        throw ArgumentError("volumes differ in size: " + std::to_string(v1.side()) + " vs " +
                            std::to_string(v2.side()));
    const Vec3 c1 = center_of_mass(v1, threshold);
    const Vec3 c2 = center_of_mass(v2, threshold);
    return {shift(v1, -c1), shift(v2, -c2), c2 - c1};
}

StageVolumes prepare_stage(const CenteredPair& pair, int side, bool reflect_moving) {
    Volume moving = downsample(reflect_moving ? reflect(pair.v1) : pair.v1, side);
    Volume fixed = downsample(pair.v2, side);
    return {std::move(moving), std::move(fixed)};
}

Landscape loss_landscape(const Volume& v, LossKind kind, int grid, const LossParams& params) {
    if (grid < 3 || grid % 2 == 0)
        throw ArgumentError("landscape grid must be odd and at least 3");
    const RotationLoss loss = make_loss(v, v, kind, params);
    Landscape out;
    out.grid = grid;
    out.values.resize(static_cast<std::size_t>(grid * grid));
    auto angle = [grid](int i) { return -90.0 + 180.0 * i / (grid - 1); };
    for (int g = 0; g < grid; ++g)
        for (int b = 0; b < grid; ++b)
            out.values[static_cast<std::size_t>(b + grid * g)] =
                loss(rotation_z_deg(angle(g)) * rotation_y_deg(angle(b)));
    const double peak = *std::max_element(out.values.begin(), out.values.end());
    if (peak > 0.0)
        for (double& x : out.values)
            x /= peak;

    std::vector<char> seen(out.values.size(), 0);
    std::vector<int> stack{grid / 2 + grid * (grid / 2)};
    seen[static_cast<std::size_t>(stack.back())] = 1;
    while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        if (!(out.values[static_cast<std::size_t>(idx)] < 0.5))
            continue;
        ++out.basin_size;
        const int b = idx % grid;
        const int g = idx / grid;
        const int neighbours[4][2] = {{b - 1, g}, {b + 1, g}, {b, g - 1}, {b, g + 1}};
        for (const auto& nb : neighbours) {
            if (nb[0] < 0 || nb[1] < 0 || nb[0] >= grid || nb[1] >= grid)
                continue;
            const int n = nb[0] + grid * nb[1];
            if (!seen[static_cast<std::size_t>(n)]) {
                seen[static_cast<std::size_t>(n)] = 1;
                stack.push_back(n);
            }
        }
    }
    return out;
}

double median_loss_seconds(const Volume& v, int side, LossKind kind, int evaluations, std::uint64_t seed) {
    if (evaluations < 1)
        throw ArgumentError("need at least one timed evaluation");
    const Volume working = downsample(v, side);
    const RotationLoss loss = make_loss(working, working, kind);
    std::mt19937_64 rng(seed);
    std::vector<double> times;
    for (int i = 0; i < evaluations; ++i) {
        const Rotation r = random_rotation(rng);
        const auto t0 = Clock::now();
        volatile double sink = loss(r);
        static_cast<void>(sink);
        times.push_back(seconds_since(t0));
    }
    std::nth_element(times.begin(), times.begin() + evaluations / 2, times.end());
    return times[static_cast<std::size_t>(evaluations / 2)];
}

AlignmentReport align_volumes(const Volume& v1, const Volume& v2, const AlignOptions& options,
                              const std::optional<GroundTruth>& truth) {
    const auto start = Clock::now();
    if (v1.side() != v2.side())
        throw ArgumentError("volumes differ in size: " + std::to_string(v1.side()) + " vs " +
                            std::to_string(v2.side()));
    options.validate(v1.side());

    AlignmentReport report;
    report.options = options;
    report.loss_kind = options.loss;

    const CenteredPair pair = center_pair(v1, v2, options.threshold);
    report.translation = pair.translation;
    report.times.centering = seconds_since(start);

    BoConfig cfg;
    cfg.iterations = options.iterations;
    cfg.kernel.lengthscale = options.effective_lengthscale();
    cfg.inner_restarts = options.inner_restarts;
    cfg.seed = options.seed;

    LossParams loss_params;
    loss_params.wavelet_levels = options.wavelet_levels;
    loss_params.custom = options.custom_distance;

    std::optional<BranchResult> chosen;
    std::vector<bool> branches{false};
    if (options.handedness)
        branches.push_back(true);
    for (const bool reflected : branches) {
        BranchResult branch;
        branch.reflected = reflected;

        auto t0 = Clock::now();
        const StageVolumes stage = prepare_stage(pair, options.downsample, reflected);
        const RotationLoss loss = make_loss(stage.fixed, stage.moving, options.loss, loss_params);
        branch.bo = bo_align(loss, cfg);
        branch.bo_seconds = seconds_since(t0);
        branch.branch_loss = branch.bo.trace.best().loss;

        if (options.refine) {
            t0 = Clock::now();
            const StageVolumes refine_stage = options.refine_downsample == options.downsample
                                                  ? stage
                                                  : prepare_stage(pair, options.refine_downsample, reflected);
            const RotationLoss l2 = make_loss(refine_stage.fixed, refine_stage.moving, LossKind::L2);
            branch.refinement = nelder_mead_refine(l2, branch.bo.best, options.refine_radius_deg);
            branch.refine_seconds = seconds_since(t0);
            branch.branch_loss = branch.refinement->loss;
        }

        report.branch_losses.push_back(branch.branch_loss);
        report.times.bayesian_optimization += branch.bo_seconds;
        report.times.refinement += branch.refine_seconds;
        if (!chosen || branch.branch_loss < chosen->branch_loss)
            chosen = std::move(branch);
    }

    report.reflected = chosen->reflected;
    report.rotation_est = chosen->bo.best;
    report.trace = std::move(chosen->bo.trace);
    if (chosen->refinement) {
        report.rotation_refined = chosen->refinement->rotation;
        report.refinement = chosen->refinement;
    }

    if (truth) {
        report.error_deg_est = geodesic_angle_deg(report.rotation_est, truth->rotation);
        report.error_deg = geodesic_angle_deg(report.final_rotation(), truth->rotation);
        report.translation_error_voxels = (report.translation - truth->translation).norm();
    }
    report.times.total = seconds_since(start);
    return report;
}

} // namespace volalign
