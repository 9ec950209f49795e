#include "insphere/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "insphere/binary_io.hpp"
#include "insphere/errors.hpp"
#include "insphere/parallel.hpp"

namespace insphere {

std::int64_t VoxelGrid::occupied_count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : occupancy) n += v;
    return n;
}

namespace {

// Triangle projected onto the (y,z) plane, keeping vertex x for crossing
// interpolation.
struct ProjTri {
    double ay, az, by, bz, cy, cz;
    double ax, bx, cx;
};

double orient2d(double ux, double uy, double vx, double vy, double px, double py) {
    return (vx - ux) * (py - uy) - (vy - uy) * (px - ux);
}

// Tests whether the x-parallel line through (py,pz) pierces the triangle.
// Returns 1 with the crossing x, 0 when strictly outside, -1 when the line
// hits an edge or vertex exactly (caller re-casts with a jittered origin).
// With zeros_inside set, exact edge hits count as crossings; used only on
// the final attempt so a column always resolves.
int classify(const ProjTri& t, double py, double pz, bool zeros_inside, double* x) {
    double w0 = orient2d(t.by, t.bz, t.cy, t.cz, py, pz);
    double w1 = orient2d(t.cy, t.cz, t.ay, t.az, py, pz);
    double w2 = orient2d(t.ay, t.az, t.by, t.bz, py, pz);
    bool pos = w0 > 0.0 || w1 > 0.0 || w2 > 0.0;
    bool neg = w0 < 0.0 || w1 < 0.0 || w2 < 0.0;
    if (pos && neg) return 0;
    if (!zeros_inside && (w0 == 0.0 || w1 == 0.0 || w2 == 0.0)) return -1;
    double den = (w0 + w1) + w2;
    *x = ((w0 * t.ax + w1 * t.bx) + w2 * t.cx) / den;
    return 1;
}

} // namespace

VoxelGrid voxelize_solid(const TriangleMesh& mesh, int resolution) {
    if (resolution < 8)
        throw UserError("voxelize_solid: resolution must be at least 8, got " +
                        std::to_string(resolution));
    if (resolution > kMaxResolution)
        throw ResolutionTooLarge("voxelize_solid: resolution " + std::to_string(resolution) +
                                 " exceeds cap " + std::to_string(kMaxResolution));
    if (mesh.empty()) throw EmptyMesh("voxelize_solid: mesh has no geometry");

    const int R = resolution;
    const double h = 1.0 / R;

    // Triangles whose (y,z) projection is degenerate run parallel to the ray
    // and cannot produce a transversal crossing; drop them up front.
    std::vector<ProjTri> tris;
    tris.reserve(mesh.faces.size());
    bool any_area = false;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        if (norm2(cross(b - a, c - a)) > 0.0) any_area = true;
        if (orient2d(a.y, a.z, b.y, b.z, c.y, c.z) == 0.0) continue;
        tris.push_back({a.y, a.z, b.y, b.z, c.y, c.z, a.x, b.x, c.x});
    }
    if (!any_area) throw DegenerateMesh("voxelize_solid: every face has zero area");

    // Bin triangles by the (j,k) columns their projected bbox can reach, one
    // cell of slack so jittered origins stay covered.  CSR layout.
    const std::int64_t columns = static_cast<std::int64_t>(R) * R;
    auto cell_range = [R](double lo, double hi, int& out_lo, int& out_hi) {
        out_lo = std::max(0, static_cast<int>(std::floor((lo + 0.5) * R - 0.5)) - 1);
        out_hi = std::min(R - 1, static_cast<int>(std::ceil((hi + 0.5) * R - 0.5)) + 1);
    };
    std::vector<std::array<int, 4>> spans(tris.size());
    std::vector<int> offsets(columns + 1, 0);
    for (size_t t = 0; t < tris.size(); ++t) {
        const ProjTri& p = tris[t];
        int jl, jh, kl, kh;
        cell_range(std::min({p.ay, p.by, p.cy}), std::max({p.ay, p.by, p.cy}), jl, jh);
        cell_range(std::min({p.az, p.bz, p.cz}), std::max({p.az, p.bz, p.cz}), kl, kh);
        spans[t] = {jl, jh, kl, kh};
        for (int k = kl; k <= kh; ++k)
            for (int j = jl; j <= jh; ++j) offsets[j + static_cast<std::int64_t>(R) * k + 1]++;
    }
    for (std::int64_t c = 0; c < columns; ++c) offsets[c + 1] += offsets[c];
    std::vector<int> items(offsets[columns]);
    {
        std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
        for (size_t t = 0; t < tris.size(); ++t) {
            auto [jl, jh, kl, kh] = spans[t];
            for (int k = kl; k <= kh; ++k)
                for (int j = jl; j <= jh; ++j)
                    items[cursor[j + static_cast<std::int64_t>(R) * k]++] = static_cast<int>(t);
        }
    }

    VoxelGrid grid(R);
    constexpr int kMaxAttempts = 12;
    parallel_for(columns, [&](std::int64_t begin, std::int64_t end) {
        std::vector<double> xs;
        for (std::int64_t col = begin; col < end; ++col) {
            int first = offsets[col], last = offsets[col + 1];
            if (first == last) continue;
            int j = static_cast<int>(col % R);
            int k = static_cast<int>(col / R);
            double y0 = -0.5 + (j + 0.5) * h;
            double z0 = -0.5 + (k + 0.5) * h;
            for (int attempt = 0;; ++attempt) {
                bool final_attempt = attempt == kMaxAttempts;
                double py = y0 + h * 1e-5 * attempt * 0.731;
                double pz = z0 + h * 1e-5 * attempt * 0.293;
                xs.clear();
                bool grazed = false;
                for (int t = first; t < last; ++t) {
                    double x;
                    int c = classify(tris[items[t]], py, pz, final_attempt, &x);
                    if (c < 0) {
                        grazed = true;
                        break;
                    }
                    if (c > 0) xs.push_back(x);
                }
                if (final_attempt || (!grazed && xs.size() % 2 == 0)) break;
            }
            std::sort(xs.begin(), xs.end());
            size_t pairs = xs.size() / 2; // unpaired tail dropped
            for (size_t p = 0; p < pairs; ++p) {
                double enter = xs[2 * p], exit = xs[2 * p + 1];
                int ilo = std::max(0, static_cast<int>(std::ceil((enter + 0.5) * R - 0.5)));
                int ihi = std::min(R - 1, static_cast<int>(std::floor((exit + 0.5) * R - 0.5)));
                for (int i = ilo; i <= ihi; ++i) grid.occupancy[grid.index(i, j, k)] = 1;
            }
        }
    });
    return grid;
}

std::vector<Coord> surface_voxels(const VoxelGrid& grid) {
    const int R = grid.resolution;
    std::vector<Coord> out;
    for (int k = 0; k < R; ++k)
        for (int j = 0; j < R; ++j)
            for (int i = 0; i < R; ++i) {
                if (!grid.occupied(i, j, k)) continue;
                bool exposed = i == 0 || j == 0 || k == 0 || i == R - 1 || j == R - 1 ||
                               k == R - 1 || !grid.occupied(i - 1, j, k) ||
                               !grid.occupied(i + 1, j, k) || !grid.occupied(i, j - 1, k) ||
                               !grid.occupied(i, j + 1, k) || !grid.occupied(i, j, k - 1) ||
                               !grid.occupied(i, j, k + 1);
                if (exposed) out.push_back({i, j, k});
            }
    std::sort(out.begin(), out.end());
    return out;
}

void save_voxels(const VoxelGrid& grid, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open for writing: " + path);
    write_magic(f, "IVOX");
    write_u32(f, static_cast<std::uint32_t>(grid.resolution));
    write_u64(f, 0);
    const size_t cells = grid.occupancy.size();
    std::vector<std::uint8_t> packed((cells + 7) / 8, 0);
    for (size_t c = 0; c < cells; ++c)
        if (grid.occupancy[c]) packed[c >> 3] |= static_cast<std::uint8_t>(1u << (c & 7));
    f.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
    if (!f) throw UserError("write failed: " + path);
}

VoxelGrid load_voxels(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open: " + path);
    expect_magic(f, "IVOX", path);
    std::uint32_t r = read_u32(f, path);
    read_u64(f, path);
    if (r < 8 || r > static_cast<std::uint32_t>(kMaxResolution))
        throw CacheCorrupt("voxel file resolution out of range: " + path);
    VoxelGrid grid(static_cast<int>(r));
    const size_t cells = grid.occupancy.size();
    std::vector<std::uint8_t> packed((cells + 7) / 8);
    f.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (static_cast<size_t>(f.gcount()) != packed.size())
        throw CacheCorrupt("voxel file truncated: " + path);
    if (f.peek() != std::char_traits<char>::eof())
        throw CacheCorrupt("voxel file has trailing bytes: " + path);
    for (size_t c = 0; c < cells; ++c) grid.occupancy[c] = (packed[c >> 3] >> (c & 7)) & 1u;
    return grid;
}

} // namespace insphere
