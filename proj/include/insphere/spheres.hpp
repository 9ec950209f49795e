#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insphere/sdf.hpp"
#include "insphere/voxel.hpp"

namespace insphere {

enum class Side : std::uint8_t { Interior = 0, Exterior = 1, Mixed = 2 };

const char* side_name(Side side);
Side parse_side(const std::string& name);

/// Sphere centered on a voxel, radius exactly the stored |SDF| there, so it
/// is tangent to the nearest surface voxel by construction.
struct InfillingSphere {
    Coord center;
    float radius;
    Side side;
    std::uint32_t contact_count;
};

struct SphereSet {
    std::vector<InfillingSphere> spheres; // construction order, big to small per phase
    int n_requested = 0;
    int resolution = 0;
    Side side = Side::Interior;
    std::vector<double> d_schedule; // effective separations in voxel units at this R
    bool complete = true;           // false when eligible voxels ran out before n
};

struct Candidate {
    Coord center;
    float magnitude; // |sdf| at center
    std::uint32_t contact_count;
};

/// Surface voxels s with | distance(center, s) - radius | <= 0.5.
int contact_count(const Coord& center, double radius, const std::vector<Coord>& surface);

/// Default separation schedule, stated in voxel units at R = 512; builders
/// scale it by R/512.
inline const std::vector<double> kDefaultSchedule{10.0, 5.0, 0.0};

/// All voxels of the requested side (interior: sdf < 0, exterior: sdf > 0,
/// both excluding surface and invalid voxels), sorted by |sdf| descending,
/// then contact count descending, then (i,j,k) ascending. The voxel grid
/// supplies surface voxels for contact counting; the SDF alone cannot,
/// because surface voxels outside the external sphere carry the invalid
/// sentinel yet still count as contacts.
std::vector<Candidate> sort_candidates(const SdfGrid& sdf, const VoxelGrid& grid, Side side);

/// Greedy selection over the sorted candidates, one pass per schedule entry
/// d (scaled by R/512): a candidate is accepted when its distance to every
/// accepted sphere is >= sum of radii + d, permanently rejected when the
/// distance is < sum of radii for any of them, and otherwise left eligible
/// for the next (smaller-d) pass. Stops at n accepted spheres.
SphereSet build_spheres(const SdfGrid& sdf, const VoxelGrid& grid, Side side, int n,
                        const std::vector<double>& d_schedule = kDefaultSchedule);

/// Independent interior and exterior builds, concatenated interior-first.
SphereSet build_mixed(const SdfGrid& sdf, const VoxelGrid& grid, int n_interior,
                      int n_exterior, const std::vector<double>& d_schedule = kDefaultSchedule);

/// "ISPH" cache: magic, u32 resolution, u8 side, u32 count, then per sphere
/// u16 i, u16 j, u16 k, f32 radius, u16 contact count (saturated).
void save_spheres(const SphereSet& set, const std::string& path);
SphereSet load_spheres(const std::string& path);

} // namespace insphere
