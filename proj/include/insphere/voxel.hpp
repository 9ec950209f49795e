#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insphere/geometry.hpp"
#include "insphere/mesh.hpp"

namespace insphere {

/// Largest accepted grid resolution (memory cap for dense storage).
inline constexpr int kMaxResolution = 768;

/// Dense solid occupancy over the fixed cube [-0.5, 0.5]^3 at R^3 cells.
/// Cell (i,j,k) covers [-0.5 + i/R, -0.5 + (i+1)/R) per axis; storage is
/// row-major with i fastest.
struct VoxelGrid {
    int resolution = 0;
    std::vector<std::uint8_t> occupancy;

    VoxelGrid() = default;
    explicit VoxelGrid(int r)
        : resolution(r),
          occupancy(static_cast<size_t>(r) * r * r, 0) {}

    double voxel_size() const { return 1.0 / resolution; }

    size_t index(int i, int j, int k) const {
        return static_cast<size_t>(i) +
               static_cast<size_t>(resolution) * (static_cast<size_t>(j) +
                                                  static_cast<size_t>(resolution) * k);
    }
    bool occupied(int i, int j, int k) const { return occupancy[index(i, j, k)] != 0; }
    void set(int i, int j, int k, bool v) { occupancy[index(i, j, k)] = v ? 1 : 0; }

    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < resolution && j < resolution && k < resolution;
    }

    /// Center of cell (i,j,k) in normalized coordinates.
    Vec3 center(int i, int j, int k) const {
        double h = voxel_size();
        return {-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h, -0.5 + (k + 0.5) * h};
    }

    std::int64_t occupied_count() const;
};

/// Solid voxelization by parity-counting scanline fill along x: cell (i,j,k)
/// is occupied iff its center lies inside or on the mesh. Rays that graze an
/// edge or vertex exactly are re-cast with a jittered origin, so the result
/// is deterministic and watertight-input exact.
/// Throws DegenerateMesh / ResolutionTooLarge, requires resolution >= 8.
VoxelGrid voxelize_solid(const TriangleMesh& mesh, int resolution);

/// Occupied cells with at least one unoccupied 6-neighbor; neighbors outside
/// the grid count as unoccupied. Sorted lexicographically by (i,j,k).
std::vector<Coord> surface_voxels(const VoxelGrid& grid);

/// "IVOX" dump: 16-byte header (magic, u32 resolution, 8 reserved bytes),
/// then R^3 occupancy bits packed LSB-first, row-major i fastest.
void save_voxels(const VoxelGrid& grid, const std::string& path);
VoxelGrid load_voxels(const std::string& path);

} // namespace insphere
