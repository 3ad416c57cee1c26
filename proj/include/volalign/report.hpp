#pragma once

#include <filesystem>

#include <json.hpp>

#include "volalign/pipeline.hpp"

namespace volalign {

// Rotations are serialized as row-major 9-element arrays.
nlohmann::json rotation_to_json(const Rotation& r);
Rotation rotation_from_json(const nlohmann::json& j);

// [{iter, loss, seconds, rotation}]
nlohmann::json trace_to_json(const BoTrace& trace);

nlohmann::json options_to_json(const AlignOptions& options);

// Layout documented in docs/report.schema.json.
nlohmann::json report_to_json(const AlignmentReport& report);

// {rotation: [9], translation: [3], reflected, seed}
nlohmann::json ground_truth_to_json(const GroundTruth& truth, std::uint64_t seed);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace volalign
