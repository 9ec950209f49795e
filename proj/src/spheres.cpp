#include "insphere/spheres.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "insphere/binary_io.hpp"
#include "insphere/errors.hpp"

namespace insphere {

const char* side_name(Side side) {
    switch (side) {
        case Side::Interior: return "interior";
        case Side::Exterior: return "exterior";
        case Side::Mixed: return "mixed";
    }
    return "?";
}

Side parse_side(const std::string& name) {
    if (name == "interior") return Side::Interior;
    if (name == "exterior") return Side::Exterior;
    if (name == "mixed") return Side::Mixed;
    throw UserError("unknown side: " + name + " (want interior, exterior or mixed)");
}

int contact_count(const Coord& center, double radius, const std::vector<Coord>& surface) {
    int count = 0;
    for (const Coord& s : surface) {
        double dist = std::sqrt(static_cast<double>(squared_distance(center, s)));
        if (std::fabs(dist - radius) <= 0.5) ++count;
    }
    return count;
}

namespace {

// |sqrt(e) - sqrt(m)| <= 1/2 for integers, rearranged to stay in int64.
// Equality of the two sides never occurs (the band edges m +- sqrt(m) + 1/4
// are not integers), and the float-rounded radius used by the public
// contact_count op stays well inside the gap for every R <= 64, so the two
// formulations agree wherever the oracle runs.
bool contact_band(std::int64_t e, std::int64_t m) {
    std::int64_t t = 4 * e + 4 * m - 1;
    if (t <= 0) return true;
    return t * t <= 64 * e * m;
}

// Integer offsets whose squared length lies in the contact band of squared
// radius m; iterated against the surface bitmap to count contacts.
std::vector<Coord> build_shell(std::int64_t m) {
    std::vector<Coord> out;
    if (m == 0) {
        out.push_back({0, 0, 0});
        return out;
    }
    double rm = std::sqrt(static_cast<double>(m));
    int dmax = static_cast<int>(std::floor(rm + 0.5)) + 1;
    for (int dx = -dmax; dx <= dmax; ++dx)
        for (int dy = -dmax; dy <= dmax; ++dy) {
            std::int64_t exy =
                static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy;
            double hi = static_cast<double>(m) + rm + 0.25 - static_cast<double>(exy);
            if (hi < 0.0) continue;
            int zhi = static_cast<int>(std::floor(std::sqrt(hi))) + 1;
            double lo = static_cast<double>(m) - rm + 0.25 - static_cast<double>(exy);
            int zlo = lo > 0.0 ? static_cast<int>(std::floor(std::sqrt(lo))) - 1 : 0;
            if (zlo < 0) zlo = 0;
            for (int dz = zlo; dz <= zhi; ++dz) {
                std::int64_t e = exy + static_cast<std::int64_t>(dz) * dz;
                if (!contact_band(e, m)) continue;
                out.push_back({dx, dy, dz});
                if (dz != 0) out.push_back({dx, dy, -dz});
            }
        }
    return out;
}

struct ContactCounter {
    int R;
    std::vector<std::uint8_t> surf;
    std::unordered_map<std::int64_t, std::vector<Coord>> shells;

    ContactCounter(const VoxelGrid& grid) : R(grid.resolution) {
        surf.assign(static_cast<size_t>(R) * R * R, 0);
        for (const Coord& c : surface_voxels(grid)) surf[grid.index(c[0], c[1], c[2])] = 1;
    }

    std::uint32_t count(const Coord& c, std::int64_t m) {
        auto it = shells.find(m);
        if (it == shells.end()) it = shells.emplace(m, build_shell(m)).first;
        std::uint32_t n = 0;
        for (const Coord& o : it->second) {
            int i = c[0] + o[0], j = c[1] + o[1], k = c[2] + o[2];
            if (i < 0 || j < 0 || k < 0 || i >= R || j >= R || k >= R) continue;
            n += surf[static_cast<size_t>(i) +
                      static_cast<size_t>(R) * (static_cast<size_t>(j) +
                                                static_cast<size_t>(R) * k)];
        }
        return n;
    }
};

void check_pair(const SdfGrid& sdf, const VoxelGrid& grid) {
    if (sdf.resolution != grid.resolution)
        throw ShapeMismatch("sdf resolution " + std::to_string(sdf.resolution) +
                            " does not match voxel grid " + std::to_string(grid.resolution));
}

} // namespace

std::vector<Candidate> sort_candidates(const SdfGrid& sdf, const VoxelGrid& grid, Side side) {
    if (side == Side::Mixed)
        throw UserError("sort_candidates: side must be interior or exterior");
    check_pair(sdf, grid);
    const int R = sdf.resolution;

    ContactCounter contacts(grid);
    std::vector<Candidate> cands;
    for (int k = 0; k < R; ++k)
        for (int j = 0; j < R; ++j)
            for (int i = 0; i < R; ++i) {
                size_t idx = sdf.index(i, j, k);
                if (!sdf.valid[idx]) continue;
                float v = sdf.values[idx];
                if (side == Side::Interior ? !(v < 0.0f) : !(v > 0.0f)) continue;
                float mag = std::fabs(v);
                Coord c{i, j, k};
                cands.push_back({c, mag, contacts.count(c, squared_magnitude(mag))});
            }
    if (cands.empty())
        throw NoCandidates(std::string("no ") + side_name(side) + " voxels in grid");

    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
        if (a.contact_count != b.contact_count) return a.contact_count > b.contact_count;
        return a.center < b.center;
    });
    return cands;
}

SphereSet build_spheres(const SdfGrid& sdf, const VoxelGrid& grid, Side side, int n,
                        const std::vector<double>& d_schedule) {
    if (n < 1) throw UserError("build_spheres: sphere count must be >= 1");
    if (d_schedule.empty() || d_schedule.back() != 0.0)
        throw UserError("build_spheres: separation schedule must end at 0");
    for (size_t i = 1; i < d_schedule.size(); ++i)
        if (!(d_schedule[i] < d_schedule[i - 1]))
            throw UserError("build_spheres: separation schedule must be strictly decreasing");
    check_pair(sdf, grid);

    const int R = sdf.resolution;
    std::vector<Candidate> cands = sort_candidates(sdf, grid, side);

    SphereSet set;
    set.n_requested = n;
    set.resolution = R;
    set.side = side;
    for (double d : d_schedule) set.d_schedule.push_back(d * R / 512.0);

    enum : std::uint8_t { Eligible, Accepted, Rejected };
    std::vector<std::uint8_t> status(cands.size(), Eligible);
    std::vector<Coord> acc_center;
    std::vector<double> acc_radius;

    for (double d_eff : set.d_schedule) {
        if (static_cast<int>(set.spheres.size()) == n) break;
        for (size_t ci = 0; ci < cands.size(); ++ci) {
            if (status[ci] != Eligible) continue;
            const Candidate& cand = cands[ci];
            double s_i = cand.magnitude;
            bool reject = false, blocked = false;
            for (size_t a = 0; a < acc_center.size(); ++a) {
                double dist =
                    std::sqrt(static_cast<double>(squared_distance(cand.center, acc_center[a])));
                double sum = s_i + acc_radius[a];
                if (dist < sum) {
                    reject = true;
                    break;
                }
                if (dist < sum + d_eff) blocked = true;
            }
            if (reject) {
                status[ci] = Rejected;
                continue;
            }
            if (blocked) continue;
            status[ci] = Accepted;
            acc_center.push_back(cand.center);
            acc_radius.push_back(s_i);
            set.spheres.push_back({cand.center, cand.magnitude, side, cand.contact_count});
            if (static_cast<int>(set.spheres.size()) == n) break;
        }
    }
    set.complete = static_cast<int>(set.spheres.size()) == n;
    return set;
}

SphereSet build_mixed(const SdfGrid& sdf, const VoxelGrid& grid, int n_interior,
                      int n_exterior, const std::vector<double>& d_schedule) {
    if (n_interior < 0 || n_exterior < 0 || (n_interior == 0 && n_exterior == 0))
        throw UserError("build_mixed: need a positive sphere count on at least one side");
    SphereSet set;
    set.n_requested = n_interior + n_exterior;
    set.resolution = sdf.resolution;
    set.side = Side::Mixed;
    set.complete = true;
    for (double d : d_schedule) set.d_schedule.push_back(d * sdf.resolution / 512.0);
    if (n_interior > 0) {
        SphereSet in = build_spheres(sdf, grid, Side::Interior, n_interior, d_schedule);
        set.spheres = std::move(in.spheres);
        set.complete = in.complete;
    }
    if (n_exterior > 0) {
        SphereSet ex = build_spheres(sdf, grid, Side::Exterior, n_exterior, d_schedule);
        set.spheres.insert(set.spheres.end(), ex.spheres.begin(), ex.spheres.end());
        set.complete = set.complete && ex.complete;
    }
    return set;
}

void save_spheres(const SphereSet& set, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open for writing: " + path);
    write_magic(f, "ISPH");
    write_u32(f, static_cast<std::uint32_t>(set.resolution));
    f.put(static_cast<char>(static_cast<std::uint8_t>(set.side)));
    write_u32(f, static_cast<std::uint32_t>(set.spheres.size()));
    for (const InfillingSphere& s : set.spheres) {
        write_u16(f, static_cast<std::uint16_t>(s.center[0]));
        write_u16(f, static_cast<std::uint16_t>(s.center[1]));
        write_u16(f, static_cast<std::uint16_t>(s.center[2]));
        write_f32(f, s.radius);
        write_u16(f, static_cast<std::uint16_t>(std::min<std::uint32_t>(s.contact_count, 65535)));
    }
    if (!f) throw UserError("write failed: " + path);
}

SphereSet load_spheres(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open: " + path);
    expect_magic(f, "ISPH", path);
    SphereSet set;
    std::uint32_t r = read_u32(f, path);
    if (r < 8 || r > static_cast<std::uint32_t>(kMaxResolution))
        throw CacheCorrupt("sphere file resolution out of range: " + path);
    set.resolution = static_cast<int>(r);
    int side_byte = f.get();
    if (side_byte < 0 || side_byte > 2) throw CacheCorrupt("sphere file bad side: " + path);
    set.side = static_cast<Side>(side_byte);
    std::uint32_t count = read_u32(f, path);
    set.n_requested = static_cast<int>(count);
    set.spheres.reserve(count);
    for (std::uint32_t s = 0; s < count; ++s) {
        InfillingSphere sp;
        sp.center[0] = read_u16(f, path);
        sp.center[1] = read_u16(f, path);
        sp.center[2] = read_u16(f, path);
        sp.radius = read_f32(f, path);
        sp.contact_count = read_u16(f, path);
        sp.side = set.side;
        if (sp.center[0] >= set.resolution || sp.center[1] >= set.resolution ||
            sp.center[2] >= set.resolution || !(sp.radius >= 0.0f))
            throw CacheCorrupt("sphere file record out of range: " + path);
        set.spheres.push_back(sp);
    }
    if (f.peek() != std::char_traits<char>::eof())
        throw CacheCorrupt("sphere file has trailing bytes: " + path);
    return set;
}

} // namespace insphere
