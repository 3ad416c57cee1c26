#pragma once

#include <filesystem>
#include <string>

#include "volalign/so3.hpp"
#include "volalign/volume.hpp"

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path(VOLALIGN_TEST_TMP) / name;
    std::filesystem::create_directories(dir);
    return dir;
}

inline double relative_l2(const volalign::Volume& a, const volalign::Volume& b) {
    return volalign::l2_distance(a, b) / std::sqrt(b.norm_squared());
}

// Single anisotropic blob, convenient for tests that only need something smooth.
inline volalign::Volume blob_volume(int side, const volalign::Vec3& center, double sigma) {
    volalign::SynthSpec spec;
    spec.side = side;
    volalign::GaussianBlob b;
    b.center = center;
    b.covariance = volalign::Mat3::Identity() * sigma * sigma;
    b.weight = 1.0;
    spec.blobs.push_back(b);
    return volalign::synth_volume(spec);
}

inline volalign::Vec3 grid_point(int side, int i, int j, int k) {
    const double c = 0.5 * (side - 1);
    return {i - c, j - c, k - c};
}

} // namespace testing
