#pragma once

#include "insphere/mesh.hpp"

namespace insphere {

// Procedural watertight primitives. Used by the exporter (icosphere), the
// synthetic demo dataset, and tests.

TriangleMesh make_tetrahedron();

/// Axis-aligned box [lo, hi].
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);

/// Unit icosahedron subdivided `subdivisions` times, vertices on the unit
/// sphere. 0 -> 12 verts / 20 faces, each level quadruples the face count.
TriangleMesh make_icosphere(int subdivisions);

/// Icosphere scaled per axis by `radii` and centered at `center`.
TriangleMesh make_ellipsoid(const Vec3& center, const Vec3& radii, int subdivisions = 3);

/// Capsule along +y: cylinder of half-length `half_len` and radius `radius`
/// with hemispherical caps. `segments` around, `rings` per hemisphere.
TriangleMesh make_capsule(double radius, double half_len, int segments = 24, int rings = 8);

/// Torus in the xz-plane: major radius `ring_radius`, tube radius `tube_radius`.
TriangleMesh make_torus(double ring_radius, double tube_radius, int ring_segments = 32,
                        int tube_segments = 16);

} // namespace insphere
