#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "volalign/error.hpp"
#include "volalign/volume.hpp"

using namespace volalign;
using testing::blob_volume;
using testing::relative_l2;

namespace {

// Brute-force center of mass straight from the definition.
Vec3 com_by_loops(const Volume& v) {
    Vec3 acc = Vec3::Zero();
    double mass = 0.0;
    const int n = v.side();
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double w = std::max(0.0, v(i, j, k));
                acc += w * testing::grid_point(n, i, j, k);
                mass += w;
            }
    return acc / mass;
}

Volume random_volume(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> data(static_cast<std::size_t>(side) * side * side);
    for (auto& x : data)
        x = u(rng);
    return Volume(side, std::move(data));
}

} // namespace

TEST_CASE("volume construction enforces its invariants") {
    CHECK_THROWS_AS(Volume(2, std::vector<double>(7)), ArgumentError);
    CHECK_THROWS_AS(Volume(0, {}), ArgumentError);
    std::vector<double> bad(8, 0.0);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(Volume(2, bad), ArgumentError);
    CHECK_THROWS_AS(Volume(2, std::vector<double>(8), -1.0), ArgumentError);

    Volume v(2, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(v(1, 0, 0) == 1.0);
    CHECK(v(0, 1, 0) == 2.0);
    CHECK(v(0, 0, 1) == 4.0);
}

TEST_CASE("downsample preserves constants and is the identity at full size") {
    Volume c(64, std::vector<double>(64 * 64 * 64, 2.5));
    const Volume d = downsample(c, 32);
    REQUIRE(d.side() == 32);
    for (double x : d.data())
        CHECK(std::abs(x - 2.5) < 1e-10);

    const Volume odd(33, std::vector<double>(33 * 33 * 33, -1.25));
    for (double x : downsample(odd, 17).data())
        CHECK(std::abs(x + 1.25) < 1e-10);

    const Volume r = random_volume(16, 4);
    const Volume same = downsample(r, 16);
    CHECK(l2_distance(r, same) < 1e-10);
}

TEST_CASE("downsample keeps a centered Gaussian centered") {
    const Volume v = blob_volume(64, Vec3::Zero(), 8.0);
    const Volume d = downsample(v, 32);
    const Vec3 before = com_by_loops(v);
    const Vec3 after = com_by_loops(d);
    CHECK(before.norm() < 1e-6);
    CHECK(after.norm() < 1e-6);
}

TEST_CASE("downsample argument errors") {
    const Volume v = random_volume(16, 1);
    CHECK_THROWS_AS(downsample(v, 18), ArgumentError);
    CHECK_THROWS_AS(downsample(v, 2), ArgumentError);
    CHECK_THROWS_AS(downsample(v, 9), ArgumentError);
}

TEST_CASE("rotation by the identity is exact") {
    const Volume v = random_volume(12, 3);
    CHECK(rotate(v, Rotation::identity()) == v);
}

TEST_CASE("a quarter turn moves an off-center blob to the rotated position") {
    const Vec3 c(8.0, 3.0, -2.0);
    const Volume v = blob_volume(48, c, 2.5);
    const Rotation rz = rotation_z_deg(90.0);
    const Volume r = rotate(v, rz);
    // rotate samples v at R x, so mass at c ends up at R^T c.
    const Vec3 expected = rz.transpose() * c;
    CHECK((com_by_loops(r) - expected).norm() < 0.5);
    CHECK((com_by_loops(v) - c).norm() < 0.5);
}

TEST_CASE("rotate round trip and mass leakage on the reference volume") {
    const Volume v = synth_volume(reference_synth_spec(64));
    double worst = 0.0;
    double worst_mass = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Rotation r = random_rotation(seed + 100);
        const Volume once = rotate(v, r);
        const Volume back = rotate(once, r.transpose());
        worst = std::max(worst, relative_l2(back, v));
        worst_mass = std::max(worst_mass, std::abs(once.total_mass() - v.total_mass()) / v.total_mass());
    }
    MESSAGE("round-trip rel L2 " << worst << ", mass change " << worst_mass);
    CHECK(worst < 0.05);
    CHECK(worst_mass < 0.02);
}

TEST_CASE("shift by zero is exact and integer shifts move voxels exactly") {
    const Volume v = random_volume(10, 5);
    CHECK(shift(v, Vec3::Zero()) == v);

    const Volume s = shift(v, Vec3(3, 0, 0));
    for (int k = 0; k < 10; ++k)
        for (int j = 0; j < 10; ++j)
            for (int i = 0; i < 10; ++i) {
                const double expected = i >= 3 ? v(i - 3, j, k) : 0.0;
                CHECK(s(i, j, k) == expected);
            }
}

TEST_CASE("fractional shift round trip") {
    const Volume v = blob_volume(48, Vec3(1, -2, 0.5), 5.0);
    const Vec3 t(1.3, -0.7, 2.4);
    const Volume back = shift(shift(v, t), -t);
    CHECK(relative_l2(back, v) < 0.02);
}

TEST_CASE("center of mass") {
    SUBCASE("single voxel") {
        Volume v = Volume::zeros(9);
        v(2, 7, 4) = 3.0;
        const Vec3 com = center_of_mass(v);
        CHECK(com.x() == 2 - 4.0);
        CHECK(com.y() == 7 - 4.0);
        CHECK(com.z() == 4 - 4.0);
    }
    SUBCASE("centered symmetric Gaussian") {
        CHECK(center_of_mass(blob_volume(32, Vec3::Zero(), 4.0)).norm() < 1e-6);
    }
    SUBCASE("integer shift equivariance") {
        const Volume v = blob_volume(56, Vec3(2, -1, 3), 3.0);
        const Vec3 t(2, -3, 1);
        const Vec3 d = center_of_mass(shift(v, t)) - center_of_mass(v);
        CHECK((d - t).norm() < 1e-6);
    }
    SUBCASE("matches a direct sum and honors the threshold") {
        const Volume v = synth_volume(reference_synth_spec(24));
        CHECK((center_of_mass(v) - com_by_loops(v)).norm() < 1e-10);
        CHECK_THROWS_AS(center_of_mass(v, 1e9), DegenerateVolumeError);
        CHECK_THROWS_AS(center_of_mass(Volume::zeros(8)), DegenerateVolumeError);
    }
}

TEST_CASE("noise model") {
    SUBCASE("variance formula") {
        // ||v||^2 = 1000 on a 10^3 grid with snr 1 gives unit variance.
        Volume v(10, std::vector<double>(1000, 1.0));
        CHECK(noise_variance(v, 1.0) == doctest::Approx(1.0));
    }
    SUBCASE("infinite SNR leaves the volume alone") {
        const Volume v = random_volume(8, 2);
        CHECK(add_noise(v, kNoiseFree, 3) == v);
        CHECK_THROWS_AS(add_noise(v, 0.0, 3), ArgumentError);
    }
    SUBCASE("empirical variance and reproducibility") {
        const Volume v = blob_volume(32, Vec3::Zero(), 5.0);
        const double snr = 0.25;
        const Volume a = add_noise(v, snr, 11);
        const Volume b = add_noise(v, snr, 11);
        CHECK(a == b);
        CHECK_FALSE(a == add_noise(v, snr, 12));
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double e = a.data()[i] - v.data()[i];
            sum += e;
            sq += e * e;
        }
        const double n = static_cast<double>(v.size());
        const double var = sq / n - (sum / n) * (sum / n);
        const double expected = v.norm_squared() / (n * snr);
        CHECK(std::abs(var / expected - 1.0) < 0.05);
    }
}

TEST_CASE("synthesis") {
    SUBCASE("one centered isotropic blob is symmetric") {
        const Volume v = blob_volume(21, Vec3::Zero(), 3.0);
        CHECK(com_by_loops(v).norm() < 1e-6);
        CHECK(reflect(v) == v);
    }
    SUBCASE("deterministic") {
        const SynthSpec s = random_synth_spec(24, 4, 9);
        CHECK(synth_volume(s) == synth_volume(s));
        CHECK(synth_volume(reference_synth_spec(32)) == synth_volume(reference_synth_spec(32)));
    }
    SUBCASE("rejects bad covariances and collinear centers") {
        SynthSpec s;
        s.side = 16;
        GaussianBlob b;
        b.covariance = Mat3::Identity();
        b.covariance(2, 2) = -1.0;
        s.blobs.push_back(b);
        CHECK_THROWS_AS(synth_volume(s), ArgumentError);

        SynthSpec line;
        line.side = 16;
        line.require_asymmetric = true;
        for (int i = 0; i < 3; ++i) {
            GaussianBlob g;
            g.center = Vec3(i, 0, 0);
            line.blobs.push_back(g);
        }
        CHECK_THROWS_AS(synth_volume(line), ArgumentError);
        line.blobs[2].center = Vec3(0, 2, 0);
        CHECK_NOTHROW(synth_volume(line));
    }
    SUBCASE("three non-collinear blobs have no rotational symmetry") {
        const Volume v = synth_volume(reference_synth_spec(32));
        double lowest = 1e9;
        for (std::uint64_t s = 0; s < 1000; ++s) {
            const Rotation r = random_rotation(5000 + s);
            lowest = std::min(lowest, relative_l2(rotate(v, r), v));
        }
        MESSAGE("min relative L2 over 1000 rotations: " << lowest);
        CHECK(lowest > 0.01);
    }
}

TEST_CASE("l2 distance") {
    const Volume a = random_volume(8, 21);
    const Volume b = random_volume(8, 22);
    CHECK(l2_distance(a, a) == 0.0);
    CHECK(l2_distance(a, b) == l2_distance(b, a));
    const double lhs = l2_distance(a, b) * l2_distance(a, b);
    const double rhs = a.norm_squared() + b.norm_squared() - 2.0 * dot(a, b);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
    CHECK_THROWS_AS(l2_distance(a, random_volume(9, 1)), DimensionError);
}

TEST_CASE("reflection") {
    const Volume v = synth_volume(reference_synth_spec(24));
    CHECK(reflect(reflect(v)) == v);
    const Volume r = reflect(v);
    CHECK(r(0, 3, 5) == v(23, 3, 5));
    CHECK(std::abs(center_of_mass(r).x() + center_of_mass(v).x()) < 1e-6);
    CHECK(std::abs(center_of_mass(r).y() - center_of_mass(v).y()) < 1e-9);
}
