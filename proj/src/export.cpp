#include "insphere/export.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "insphere/errors.hpp"
#include "insphere/shapes.hpp"

namespace insphere {

namespace {

const TriangleMesh& unit_sphere() {
    static const TriangleMesh mesh = make_icosphere(kExportSubdivisions);
    return mesh;
}

struct Placed {
    Vec3 center;
    double radius;
    bool critical;
};

std::vector<Placed> place(const SphereSet& set, const std::vector<int>& critical) {
    std::vector<char> mark(set.spheres.size(), 0);
    for (int i : critical) {
        if (i < 0 || i >= static_cast<int>(set.spheres.size()))
            throw UserError("critical sphere index out of range: " + std::to_string(i));
        mark[i] = 1;
    }
    const double R = set.resolution;
    std::vector<Placed> out;
    out.reserve(set.spheres.size());
    for (size_t i = 0; i < set.spheres.size(); ++i) {
        const InfillingSphere& s = set.spheres[i];
        Placed p;
        p.center = Vec3{(s.center[0] + 0.5) / R - 0.5, (s.center[1] + 0.5) / R - 0.5,
                        (s.center[2] + 0.5) / R - 0.5};
        p.radius = s.radius / R;
        p.critical = mark[i] != 0;
        out.push_back(p);
    }
    return out;
}

void write_ply(const std::vector<Placed>& placed, const std::string& path) {
    const TriangleMesh& ico = unit_sphere();
    const size_t nv = ico.vertices.size();
    const size_t nf = ico.faces.size();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open for writing: " + path);
    f << "ply\nformat ascii 1.0\n";
    f << "comment infilling spheres in normalized coordinates\n";
    f << "element vertex " << placed.size() * nv << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    f << "element face " << placed.size() * nf << "\n";
    f << "property list uchar int vertex_indices\nend_header\n";
    char buf[192];
    for (const Placed& p : placed) {
        int r = p.critical ? 230 : 178;
        int g = p.critical ? 64 : 178;
        int b = p.critical ? 48 : 178;
        for (const Vec3& v : ico.vertices) {
            std::snprintf(buf, sizeof buf, "%.7g %.7g %.7g %d %d %d\n",
                          p.center[0] + p.radius * v[0], p.center[1] + p.radius * v[1],
                          p.center[2] + p.radius * v[2], r, g, b);
            f << buf;
        }
    }
    for (size_t i = 0; i < placed.size(); ++i) {
        const size_t base = i * nv;
        for (const auto& face : ico.faces) {
            std::snprintf(buf, sizeof buf, "3 %zu %zu %zu\n", base + face[0], base + face[1],
                          base + face[2]);
            f << buf;
        }
    }
    if (!f) throw UserError("write failed: " + path);
}

void write_obj(const std::vector<Placed>& placed, const std::string& path) {
    namespace fs = std::filesystem;
    const TriangleMesh& ico = unit_sphere();
    const size_t nv = ico.vertices.size();

    fs::path mtl_path = fs::path(path);
    mtl_path.replace_extension(".mtl");
    {
        std::ofstream m(mtl_path, std::ios::binary);
        if (!m) throw UserError("cannot open for writing: " + mtl_path.string());
        m << "newmtl regular\nKd 0.70 0.70 0.70\n";
        m << "newmtl critical\nKd 0.90 0.25 0.19\n";
        if (!m) throw UserError("write failed: " + mtl_path.string());
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open for writing: " + path);
    f << "mtllib " << mtl_path.filename().string() << "\n";
    char buf[192];
    size_t base = 1; // obj indices are 1-based
    for (size_t i = 0; i < placed.size(); ++i) {
        const Placed& p = placed[i];
        std::snprintf(buf, sizeof buf, "o sphere_%04zu\n", i);
        f << buf;
        f << (p.critical ? "usemtl critical\n" : "usemtl regular\n");
        for (const Vec3& v : ico.vertices) {
            std::snprintf(buf, sizeof buf, "v %.7g %.7g %.7g\n",
                          p.center[0] + p.radius * v[0], p.center[1] + p.radius * v[1],
                          p.center[2] + p.radius * v[2]);
            f << buf;
        }
        for (const auto& face : ico.faces) {
            std::snprintf(buf, sizeof buf, "f %zu %zu %zu\n", base + face[0], base + face[1],
                          base + face[2]);
            f << buf;
        }
        base += nv;
    }
    if (!f) throw UserError("write failed: " + path);
}

} // namespace

int icosphere_vertex_count() { return static_cast<int>(unit_sphere().vertices.size()); }

int icosphere_face_count() { return static_cast<int>(unit_sphere().faces.size()); }

void export_spheres(const SphereSet& set, const std::vector<int>& critical,
                    const std::string& format, const std::string& out_path) {
    if (set.spheres.empty()) throw UserError("no spheres to export");
    std::vector<Placed> placed = place(set, critical);
    if (format == "ply")
        write_ply(placed, out_path);
    else if (format == "obj")
        write_obj(placed, out_path);
    else
        throw UnsupportedFormat("unsupported export format: " + format + " (want ply or obj)");
}

} // namespace insphere
