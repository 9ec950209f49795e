#include "insphere/shapes.hpp"

#include <cmath>
#include <cstdint>
#include <map>

namespace insphere {

TriangleMesh make_tetrahedron() {
    TriangleMesh m;
    m.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    m.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    return m;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    TriangleMesh m;
    m.vertices = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                  {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    // Two triangles per face, outward winding.
    m.faces = {{0, 2, 1}, {0, 3, 2},  // z = lo
               {4, 5, 6}, {4, 6, 7},  // z = hi
               {0, 1, 5}, {0, 5, 4},  // y = lo
               {3, 7, 6}, {3, 6, 2},  // y = hi
               {0, 4, 7}, {0, 7, 3},  // x = lo
               {1, 2, 6}, {1, 6, 5}}; // x = hi
    return m;
}

TriangleMesh make_icosphere(int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh m;
    m.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                  {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                  {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : m.vertices) v = normalized(v);
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 p = normalized((m.vertices[a] + m.vertices[b]) * 0.5);
            int idx = static_cast<int>(m.vertices.size());
            m.vertices.push_back(p);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> faces;
        faces.reserve(m.faces.size() * 4);
        for (const auto& f : m.faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            faces.push_back({f[0], ab, ca});
            faces.push_back({f[1], bc, ab});
            faces.push_back({f[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        m.faces = std::move(faces);
    }
    return m;
}

TriangleMesh make_ellipsoid(const Vec3& center, const Vec3& radii, int subdivisions) {
    TriangleMesh m = make_icosphere(subdivisions);
    for (auto& v : m.vertices)
        v = {center.x + v.x * radii.x, center.y + v.y * radii.y, center.z + v.z * radii.z};
    return m;
}

TriangleMesh make_capsule(double radius, double half_len, int segments, int rings) {
    TriangleMesh m;
    // Stacked rings from the south pole (-y) to the north pole (+y): lower
    // hemisphere, straight cylinder section, upper hemisphere.
    std::vector<double> lat_y, lat_r;
    lat_y.push_back(-half_len - radius);
    lat_r.push_back(0.0);
    for (int i = 1; i <= rings; ++i) {
        double a = (M_PI / 2) * (1.0 - double(i) / rings); // pole -> equator
        lat_y.push_back(-half_len - radius * std::sin(a));
        lat_r.push_back(radius * std::cos(a));
    }
    lat_y.push_back(half_len);
    lat_r.push_back(radius);
    for (int i = 1; i <= rings; ++i) {
        double a = (M_PI / 2) * (double(i) / rings);
        lat_y.push_back(half_len + radius * std::sin(a));
        lat_r.push_back(radius * std::cos(a));
    }
    int n_lat = static_cast<int>(lat_y.size());
    int south = 0, north = n_lat - 1;

    m.vertices.push_back({0, lat_y[south], 0});
    std::vector<std::vector<int>> ring_idx(n_lat);
    for (int i = 1; i < n_lat - 1; ++i) {
        ring_idx[i].resize(segments);
        for (int s = 0; s < segments; ++s) {
            double t = 2 * M_PI * s / segments;
            ring_idx[i][s] = static_cast<int>(m.vertices.size());
            m.vertices.push_back({lat_r[i] * std::cos(t), lat_y[i], lat_r[i] * std::sin(t)});
        }
    }
    int north_idx = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, lat_y[north], 0});

    for (int s = 0; s < segments; ++s) {
        int sn = (s + 1) % segments;
        m.faces.push_back({0, ring_idx[1][s], ring_idx[1][sn]});
        m.faces.push_back({north_idx, ring_idx[n_lat - 2][sn], ring_idx[n_lat - 2][s]});
    }
    for (int i = 1; i + 2 < n_lat; ++i) {
        for (int s = 0; s < segments; ++s) {
            int sn = (s + 1) % segments;
            int a = ring_idx[i][s], b = ring_idx[i][sn];
            int c = ring_idx[i + 1][s], d = ring_idx[i + 1][sn];
            m.faces.push_back({a, c, d});
            m.faces.push_back({a, d, b});
        }
    }
    return m;
}

TriangleMesh make_torus(double ring_radius, double tube_radius, int ring_segments,
                        int tube_segments) {
    TriangleMesh m;
    m.vertices.reserve(static_cast<size_t>(ring_segments) * tube_segments);
    for (int i = 0; i < ring_segments; ++i) {
        double u = 2 * M_PI * i / ring_segments;
        Vec3 ring_dir{std::cos(u), 0, std::sin(u)};
        for (int j = 0; j < tube_segments; ++j) {
            double v = 2 * M_PI * j / tube_segments;
            double r = ring_radius + tube_radius * std::cos(v);
            m.vertices.push_back({ring_dir.x * r, tube_radius * std::sin(v), ring_dir.z * r});
        }
    }
    auto at = [&](int i, int j) {
        return (i % ring_segments) * tube_segments + (j % tube_segments);
    };
    for (int i = 0; i < ring_segments; ++i) {
        for (int j = 0; j < tube_segments; ++j) {
            int a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1), d = at(i, j + 1);
            m.faces.push_back({a, b, c});
            m.faces.push_back({a, c, d});
        }
    }
    return m;
}

} // namespace insphere
