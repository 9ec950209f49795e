#pragma once

#include <string>
#include <vector>

#include "insphere/spheres.hpp"

namespace insphere {

// Renders a sphere set as one icosphere mesh per infilling sphere in
// normalized coordinates: center (index + 0.5)/R - 0.5, radius r/R. Indices
// listed in `critical` get the highlight color (ply) or material (obj).

constexpr int kExportSubdivisions = 1; // 42 vertices, 80 faces per sphere

int icosphere_vertex_count();
int icosphere_face_count();

/// format: "ply" (ascii, per-vertex uchar RGB) or "obj" (one object per
/// sphere, material library written next to the .obj).
/// Throws UnsupportedFormat / UserError.
void export_spheres(const SphereSet& set, const std::vector<int>& critical,
                    const std::string& format, const std::string& out_path);

} // namespace insphere
