#pragma once

#include <filesystem>

#include "volalign/volume.hpp"

namespace volalign {

// MRC2014, mode 2 (float32), cubic maps only. Data are read in file order as
// x fastest. Voxel size is CELLA.x / MX when both are positive.
Volume load_mrc(const std::filesystem::path& path);

// Writes a mode-2 map with the "MAP " stamp and little-endian machine stamp.
// Values are narrowed to float32.
void save_mrc(const Volume& v, const std::filesystem::path& path);

} // namespace volalign
