#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "insphere/errors.hpp"
#include "insphere/sdf.hpp"
#include "insphere/shapes.hpp"
#include "test_support.hpp"

using namespace insphere;

namespace {

// Bitwise comparison: both NaN (invalid) or both the identical finite float.
bool grids_identical(const SdfGrid& a, const SdfGrid& b) {
    if (a.resolution != b.resolution) return false;
    for (size_t e = 0; e < a.values.size(); ++e) {
        if (a.valid[e] != b.valid[e]) return false;
        if (!a.valid[e]) continue;
        if (a.values[e] != b.values[e]) return false;
        if (std::signbit(a.values[e]) != std::signbit(b.values[e])) return false;
    }
    return true;
}

} // namespace

TEST_CASE("fast and brute-force transforms agree bitwise on random bitmaps") {
    auto rng = testsup::rng_for("sdf-oracle");
    for (int t = 0; t < 8; ++t) {
        int R = std::uniform_int_distribution<int>(8, 40)(rng);
        VoxelGrid g = testsup::random_bitmap(rng, R);
        CHECK(grids_identical(compute_sdf(g), brute_force_sdf(g)));
    }
}

TEST_CASE("fast and brute-force transforms agree on voxelized meshes") {
    auto rng = testsup::rng_for("sdf-oracle-mesh");
    for (int t = 0; t < 4; ++t) {
        TriangleMesh m = testsup::random_mesh(rng);
        VoxelGrid g = voxelize_solid(m, 32);
        CHECK(grids_identical(compute_sdf(g), brute_force_sdf(g)));
    }
}

TEST_CASE("centered cube puts -15 at the grid center") {
    VoxelGrid g(64);
    for (int k = 16; k <= 47; ++k)
        for (int j = 16; j <= 47; ++j)
            for (int i = 16; i <= 47; ++i) g.set(i, j, k, true);
    SdfGrid sdf = compute_sdf(g);
    REQUIRE(sdf.is_valid(31, 31, 31));
    CHECK(sdf.at(31, 31, 31) == -15.0f);
}

TEST_CASE("corners beyond the external sphere are the invalid sentinel") {
    VoxelGrid g(64);
    for (int k = 28; k <= 35; ++k)
        for (int j = 28; j <= 35; ++j)
            for (int i = 28; i <= 35; ++i) g.set(i, j, k, true);
    SdfGrid sdf = compute_sdf(g);
    CHECK_FALSE(sdf.is_valid(0, 0, 0));
    CHECK_FALSE(sdf.is_valid(63, 63, 63));
    CHECK(std::isnan(sdf.at(0, 0, 0)));
    CHECK(std::bit_cast<std::uint32_t>(sdf.at(0, 0, 0)) == 0x7FC00000u);
    CHECK(sdf.is_valid(31, 31, 31));
}

TEST_CASE("validity matches the exact center-in-sphere predicate") {
    auto rng = testsup::rng_for("sdf-validity");
    int R = 24;
    VoxelGrid g = testsup::random_bitmap(rng, R);
    SdfGrid sdf = compute_sdf(g);
    for (int k = 0; k < R; ++k)
        for (int j = 0; j < R; ++j)
            for (int i = 0; i < R; ++i)
                CHECK(sdf.is_valid(i, j, k) == inside_external_sphere(i, j, k, R));
}

TEST_CASE("external sphere boundary has no exact ties") {
    for (int R : {8, 12, 16, 21, 32}) {
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < R; ++j)
                for (int k = 0; k < R; ++k) {
                    std::int64_t a = 2 * i + 1 - R, b = 2 * j + 1 - R, c = 2 * k + 1 - R;
                    REQUIRE(a * a + b * b + c * c != static_cast<std::int64_t>(R) * R);
                }
    }
}

TEST_CASE("sign convention: negative inside, zero on surface, positive outside") {
    VoxelGrid g(16);
    for (int k = 4; k <= 11; ++k)
        for (int j = 4; j <= 11; ++j)
            for (int i = 4; i <= 11; ++i) g.set(i, j, k, true);
    SdfGrid sdf = compute_sdf(g);
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) {
                if (!sdf.is_valid(i, j, k)) continue;
                float v = sdf.at(i, j, k);
                bool occ = g.occupied(i, j, k);
                bool boundary = occ && (i == 4 || i == 11 || j == 4 || j == 11 || k == 4 ||
                                        k == 11);
                if (boundary) {
                    CHECK(v == 0.0f);
                    CHECK_FALSE(std::signbit(v)); // surface is +0.0
                } else if (occ) {
                    CHECK(v < 0.0f);
                } else {
                    CHECK(v > 0.0f);
                }
            }
}

TEST_CASE("stored magnitudes recover their integer squared distance exactly") {
    // every d2 reachable at small R, then samples up to the resolution cap
    for (std::int64_t d2 = 0; d2 <= 3 * 64 * 64; ++d2) {
        float m = static_cast<float>(std::sqrt(static_cast<double>(d2)));
        CHECK(squared_magnitude(m) == d2);
    }
    auto rng = testsup::rng_for("sdf-squared");
    std::uniform_int_distribution<std::int64_t> pick(0, 3LL * 768 * 768);
    for (int t = 0; t < 20000; ++t) {
        std::int64_t d2 = pick(rng);
        float m = static_cast<float>(std::sqrt(static_cast<double>(d2)));
        CHECK(squared_magnitude(m) == d2);
    }
}

TEST_CASE("sdf magnitudes square back to integers on real grids") {
    auto rng = testsup::rng_for("sdf-integer");
    VoxelGrid g = testsup::random_bitmap(rng, 28);
    SdfGrid sdf = compute_sdf(g);
    for (size_t e = 0; e < sdf.values.size(); ++e) {
        if (!sdf.valid[e]) continue;
        double v = std::fabs(static_cast<double>(sdf.values[e]));
        std::int64_t d2 = squared_magnitude(sdf.values[e]);
        CHECK(static_cast<float>(std::sqrt(static_cast<double>(d2))) == std::fabs(sdf.values[e]));
        CHECK(v * v == doctest::Approx(static_cast<double>(d2)).epsilon(1e-6));
    }
}

TEST_CASE("empty grids are rejected") {
    VoxelGrid g(16);
    CHECK_THROWS_AS(compute_sdf(g), EmptyGrid);
    CHECK_THROWS_AS(brute_force_sdf(g), EmptyGrid);
}

TEST_CASE("brute force enforces its resolution cap") {
    VoxelGrid g(65);
    g.set(32, 32, 32, true);
    CHECK_THROWS_AS(brute_force_sdf(g), ResolutionTooLarge);
}

TEST_CASE("sdf cache round-trips bitwise") {
    testsup::TempDir dir("sdf");
    auto rng = testsup::rng_for("sdf-io");
    VoxelGrid g = testsup::random_bitmap(rng, 17);
    SdfGrid sdf = compute_sdf(g);
    std::string p = dir.str("f.isdf");
    save_sdf(sdf, p);
    CHECK(std::filesystem::file_size(p) == 8 + sizeof(float) * 17 * 17 * 17);
    SdfGrid back = load_sdf(p);
    CHECK(back.resolution == sdf.resolution);
    CHECK(back.valid == sdf.valid);
    for (size_t e = 0; e < sdf.values.size(); ++e)
        if (sdf.valid[e]) CHECK(back.values[e] == sdf.values[e]);
}

TEST_CASE("sdf cache rejects corruption") {
    testsup::TempDir dir("sdf");
    auto rng = testsup::rng_for("sdf-io-corrupt");
    VoxelGrid g = testsup::random_bitmap(rng, 12);
    SdfGrid sdf = compute_sdf(g);
    std::string p = dir.str("f.isdf");
    save_sdf(sdf, p);

    std::string clipped = dir.str("clipped.isdf");
    {
        std::ifstream in(p, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        std::ofstream out(clipped, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 2));
    }
    CHECK_THROWS_AS(load_sdf(clipped), CacheCorrupt);

    // overwrite an invalid voxel's sentinel with a finite value: the loader
    // must notice the mask disagreeing with the geometry
    int bad_i = 0, bad_j = 0, bad_k = 0;
    REQUIRE_FALSE(inside_external_sphere(bad_i, bad_j, bad_k, 12));
    std::string flipped = dir.str("flipped.isdf");
    std::filesystem::copy_file(p, flipped);
    {
        std::fstream out(flipped, std::ios::binary | std::ios::in | std::ios::out);
        out.seekp(8); // first voxel starts after the header
        float v = 1.5f;
        char buf[4];
        std::memcpy(buf, &v, 4);
        out.write(buf, 4);
    }
    CHECK_THROWS_AS(load_sdf(flipped), CacheCorrupt);

    CHECK_THROWS_AS(load_sdf(dir.str("absent.isdf")), UserError);
}
