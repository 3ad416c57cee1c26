#include "volalign/report.hpp"

#include <fstream>

#include "volalign/error.hpp"

namespace volalign {

using nlohmann::json;

namespace {

json vec_to_json(const Vec3& v) {
    return json::array({v.x(), v.y(), v.z()});
}

template <typename T>
json optional_to_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

json rotation_to_json(const Rotation& r) {
    const auto values = r.row_major();
    return json(std::vector<double>(values.begin(), values.end()));
}

Rotation rotation_from_json(const json& j) {
    if (!j.is_array() || j.size() != 9)
        throw FormatError("rotation must be a 9-element array");
    std::array<double, 9> values{};
    for (std::size_t i = 0; i < 9; ++i)
        values[i] = j.at(i).get<double>();
    return Rotation::from_row_major(values);
}

json trace_to_json(const BoTrace& trace) {
    json out = json::array();
    for (const auto& rec : trace.records)
        out.push_back({{"iter", rec.iteration},
                       {"loss", rec.loss},
                       {"seconds", rec.seconds},
                       {"rotation", rotation_to_json(rec.candidate)}});
    return out;
}

json options_to_json(const AlignOptions& o) {
    return {{"downsample", o.downsample},
            {"iterations", o.iterations},
            {"loss", to_string(o.loss)},
            {"lengthscale", o.effective_lengthscale()},
            {"refine", o.refine},
            {"refine_downsample", o.refine_downsample},
            {"refine_radius_deg", o.refine_radius_deg},
            {"handedness", o.handedness},
            {"wavelet_levels", o.wavelet_levels},
            {"threshold", o.threshold},
            {"inner_restarts", o.inner_restarts},
            {"seed", o.seed}};
}

json report_to_json(const AlignmentReport& r) {
    json out;
    out["rotation_est"] = rotation_to_json(r.rotation_est);
    out["rotation_refined"] = r.rotation_refined ? rotation_to_json(*r.rotation_refined) : json(nullptr);
    out["translation"] = vec_to_json(r.translation);
    out["reflected"] = r.reflected;
    out["loss_kind"] = to_string(r.loss_kind);
    out["trace"] = trace_to_json(r.trace);
    out["best_index"] = r.trace.best_index;
    out["refine_loss"] = r.refinement ? json(r.refinement->loss) : json(nullptr);
    out["refine_evaluations"] = r.refinement ? json(r.refinement->evaluations) : json(nullptr);
    out["branch_losses"] = r.branch_losses;
    out["error_deg"] = optional_to_json(r.error_deg);
    out["error_deg_est"] = optional_to_json(r.error_deg_est);
    out["translation_error_voxels"] = optional_to_json(r.translation_error_voxels);
    out["timings"] = {{"centering", r.times.centering},
                      {"bayesian_optimization", r.times.bayesian_optimization},
                      {"refinement", r.times.refinement},
                      {"total", r.times.total}};
    out["config"] = options_to_json(r.options);
    return out;
}

json ground_truth_to_json(const GroundTruth& truth, std::uint64_t seed) {
    return {{"rotation", rotation_to_json(truth.rotation)},
            {"translation", vec_to_json(truth.translation)},
            {"reflected", truth.reflected},
            {"seed", seed}};
}

GroundTruth ground_truth_from_json(const json& j) {
    try {
        GroundTruth truth;
        truth.rotation = rotation_from_json(j.at("rotation"));
        const auto& t = j.at("translation");
        if (!t.is_array() || t.size() != 3)
            throw FormatError("translation must be a 3-element array");
        truth.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
        truth.reflected = j.value("reflected", false);
        return truth;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed ground-truth JSON: ") + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace volalign
