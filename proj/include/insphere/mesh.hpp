#pragma once

#include <string>
#include <vector>

#include "insphere/geometry.hpp"

namespace insphere {

/// Watertight triangle surface. Coordinates are model units until
/// normalize() maps the bounding box to the origin-centered unit volume.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::string label; // optional category identifier

    bool empty() const { return faces.empty() || vertices.empty(); }
    Aabb bounds() const;
};

/// Load an ASCII OFF file. Accepts the standard "OFF" header as well as the
/// ModelNet variant where the counts share the header line ("OFF490 312 0").
/// Polygons with more than three vertices are fan-triangulated.
/// Throws ParseError / EmptyMesh.
TriangleMesh load_off(const std::string& path);

void save_off(const TriangleMesh& mesh, const std::string& path);

/// Center the bounding box at the origin and scale uniformly so the longest
/// axis has extent exactly 1. Idempotent: re-normalizing a normalized mesh
/// returns it bit-identically. Throws DegenerateMesh / EmptyMesh.
TriangleMesh normalize(const TriangleMesh& mesh);

} // namespace insphere
