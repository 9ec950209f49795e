#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "insphere/voxel.hpp"

namespace insphere {

/// Signed distance per voxel center to the nearest surface-voxel center, in
/// voxel units: negative inside the object, positive outside, 0 on surface
/// voxels. Voxels whose center falls outside the external sphere of radius
/// R/2 (centered in the grid) are invalid and hold a quiet-NaN sentinel.
struct SdfGrid {
    int resolution = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> valid;

    SdfGrid() = default;
    explicit SdfGrid(int r)
        : resolution(r),
          values(static_cast<size_t>(r) * r * r, 0.0f),
          valid(static_cast<size_t>(r) * r * r, 0) {}

    size_t index(int i, int j, int k) const {
        return static_cast<size_t>(i) +
               static_cast<size_t>(resolution) * (static_cast<size_t>(j) +
                                                  static_cast<size_t>(resolution) * k);
    }
    float at(int i, int j, int k) const { return values[index(i, j, k)]; }
    bool is_valid(int i, int j, int k) const { return valid[index(i, j, k)] != 0; }
};

/// Recovers the exact integer squared distance from a stored magnitude.
/// float(sqrt(d2)) carries relative error < 2^-24, so v*v stays within 0.5
/// of d2 for every d2 reachable at the resolution cap (3 * 768^2).
inline std::int64_t squared_magnitude(float v) {
    double d = v;
    return std::llround(d * d);
}

/// Center-inside-external-sphere test, exact in integers. Equality of the
/// two sides is impossible (opposite parity), so there is no boundary tie.
inline bool inside_external_sphere(int i, int j, int k, int r) {
    std::int64_t a = 2 * i + 1 - r;
    std::int64_t b = 2 * j + 1 - r;
    std::int64_t c = 2 * k + 1 - r;
    return a * a + b * b + c * c <= static_cast<std::int64_t>(r) * r;
}

/// Exact Euclidean distance transform (per-axis lower-envelope passes).
/// Throws EmptyGrid when nothing is occupied.
SdfGrid compute_sdf(const VoxelGrid& grid);

/// Direct min over all surface voxels; O(R^6) test oracle, R <= 64.
/// Deliberately shares no distance/surface code with compute_sdf.
SdfGrid brute_force_sdf(const VoxelGrid& grid);

/// "ISDF" dump: magic, u32 resolution, R^3 little-endian f32 row-major
/// i-fastest; invalid voxels stored as the exact quiet-NaN bit pattern.
void save_sdf(const SdfGrid& sdf, const std::string& path);
SdfGrid load_sdf(const std::string& path);

} // namespace insphere
