#include "insphere/sdf.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "insphere/binary_io.hpp"
#include "insphere/errors.hpp"
#include "insphere/parallel.hpp"

namespace insphere {
namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 4;

// One lower-envelope pass of the squared distance transform. f[q] >= kInf
// means no site reaches this line yet. Parabola intersections are rationals
// with denominator <= 2R, far above double rounding error, so the envelope
// is exact; a tie at a cell center picks between parabolas of equal value.
void envelope_line(const int* f, int n, int* out, int* v, double* z) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] >= kInf) continue;
        double s = 0.0;
        while (k >= 0) {
            int p = v[k];
            s = (static_cast<double>(f[q] + q * q) - static_cast<double>(f[p] + p * p)) /
                (2.0 * (q - p));
            if (k > 0 && s <= z[k])
                --k;
            else
                break;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -1e18;
        } else {
            ++k;
            v[k] = q;
            z[k] = s;
        }
        z[k + 1] = 1e18;
    }
    if (k < 0) {
        std::fill_n(out, n, kInf);
        return;
    }
    int idx = 0;
    for (int q = 0; q < n; ++q) {
        while (z[idx + 1] < q) ++idx;
        int p = v[idx];
        out[q] = f[p] + (q - p) * (q - p);
    }
}

float magnitude_from_squared(int d2) {
    return static_cast<float>(std::sqrt(static_cast<double>(d2)));
}

} // namespace

SdfGrid compute_sdf(const VoxelGrid& grid) {
    const int R = grid.resolution;
    const std::int64_t cells = static_cast<std::int64_t>(R) * R * R;
    if (grid.occupied_count() == 0) throw EmptyGrid("compute_sdf: grid has no occupied voxels");

    std::vector<std::uint8_t> surf(cells, 0);
    for (const Coord& c : surface_voxels(grid)) surf[grid.index(c[0], c[1], c[2])] = 1;

    const std::int64_t lines = static_cast<std::int64_t>(R) * R;
    std::vector<int> d2(cells);

    // Pass along i: two-sweep linear distance to the nearest surface voxel
    // in the row, then squared.
    parallel_for(lines, [&](std::int64_t begin, std::int64_t end) {
        std::vector<int> left(R);
        for (std::int64_t line = begin; line < end; ++line) {
            std::int64_t base = line * R;
            int run = kInf;
            for (int i = 0; i < R; ++i) {
                run = surf[base + i] ? 0 : (run >= kInf ? kInf : run + 1);
                left[i] = run;
            }
            run = kInf;
            for (int i = R - 1; i >= 0; --i) {
                run = surf[base + i] ? 0 : (run >= kInf ? kInf : run + 1);
                int d = std::min(left[i], run);
                d2[base + i] = d >= kInf ? kInf : d * d;
            }
        }
    });

    // Pass along j, then along k: lower-envelope reduction per line.
    auto strided_pass = [&](std::int64_t stride, auto line_base) {
        parallel_for(lines, [&](std::int64_t begin, std::int64_t end) {
            std::vector<int> f(R), out(R), v(R);
            std::vector<double> z(static_cast<size_t>(R) + 1);
            for (std::int64_t line = begin; line < end; ++line) {
                std::int64_t base = line_base(line);
                for (int q = 0; q < R; ++q) f[q] = d2[base + q * stride];
                envelope_line(f.data(), R, out.data(), v.data(), z.data());
                for (int q = 0; q < R; ++q) d2[base + q * stride] = out[q];
            }
        });
    };
    // lines indexed by (i,k): base = i + R^2 k, stride R
    strided_pass(R, [&](std::int64_t line) {
        return (line % R) + static_cast<std::int64_t>(R) * R * (line / R);
    });
    // lines indexed by (i,j): base = i + R j, stride R^2
    strided_pass(static_cast<std::int64_t>(R) * R,
                 [&](std::int64_t line) { return line; });

    SdfGrid sdf(R);
    const float invalid = std::bit_cast<float>(kInvalidSdfBits);
    parallel_for(lines, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t line = begin; line < end; ++line) {
            int j = static_cast<int>(line % R);
            int k = static_cast<int>(line / R);
            std::int64_t base = line * R;
            for (int i = 0; i < R; ++i) {
                if (!inside_external_sphere(i, j, k, R)) {
                    sdf.values[base + i] = invalid;
                    continue;
                }
                sdf.valid[base + i] = 1;
                int dd = d2[base + i];
                if (dd == 0)
                    sdf.values[base + i] = 0.0f;
                else
                    sdf.values[base + i] = grid.occupancy[base + i]
                                               ? -magnitude_from_squared(dd)
                                               : magnitude_from_squared(dd);
            }
        }
    });
    return sdf;
}

SdfGrid brute_force_sdf(const VoxelGrid& grid) {
    const int R = grid.resolution;
    if (R > 64)
        throw ResolutionTooLarge("brute_force_sdf: resolution " + std::to_string(R) +
                                 " exceeds oracle limit 64");
    if (grid.occupied_count() == 0)
        throw EmptyGrid("brute_force_sdf: grid has no occupied voxels");

    // Independent surface extraction: occupied with an unoccupied or
    // out-of-grid 6-neighbor. Struct-of-arrays so the min loop vectorizes.
    std::vector<int> sx, sy, sz;
    auto occ = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= R || j >= R || k >= R) return false;
        return grid.occupancy[grid.index(i, j, k)] != 0;
    };
    for (int k = 0; k < R; ++k)
        for (int j = 0; j < R; ++j)
            for (int i = 0; i < R; ++i) {
                if (!occ(i, j, k)) continue;
                if (occ(i - 1, j, k) && occ(i + 1, j, k) && occ(i, j - 1, k) &&
                    occ(i, j + 1, k) && occ(i, j, k - 1) && occ(i, j, k + 1))
                    continue;
                sx.push_back(i);
                sy.push_back(j);
                sz.push_back(k);
            }

    SdfGrid sdf(R);
    const float invalid = std::bit_cast<float>(kInvalidSdfBits);
    const size_t ns = sx.size();
    for (int k = 0; k < R; ++k)
        for (int j = 0; j < R; ++j)
            for (int i = 0; i < R; ++i) {
                size_t idx = sdf.index(i, j, k);
                std::int64_t a = 2 * i + 1 - R;
                std::int64_t b = 2 * j + 1 - R;
                std::int64_t c = 2 * k + 1 - R;
                if (a * a + b * b + c * c > static_cast<std::int64_t>(R) * R) {
                    sdf.values[idx] = invalid;
                    continue;
                }
                sdf.valid[idx] = 1;
                int best = std::numeric_limits<int>::max();
                const int* px = sx.data();
                const int* py = sy.data();
                const int* pz = sz.data();
                for (size_t s = 0; s < ns; ++s) {
                    int dx = i - px[s], dy = j - py[s], dz = k - pz[s];
                    int e = dx * dx + dy * dy + dz * dz;
                    best = e < best ? e : best;
                }
                if (best == 0)
                    sdf.values[idx] = 0.0f;
                else
                    sdf.values[idx] = grid.occupancy[idx] ? -magnitude_from_squared(best)
                                                          : magnitude_from_squared(best);
            }
    return sdf;
}

void save_sdf(const SdfGrid& sdf, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open for writing: " + path);
    write_magic(f, "ISDF");
    write_u32(f, static_cast<std::uint32_t>(sdf.resolution));
    std::vector<unsigned char> buf;
    buf.reserve(1 << 20);
    for (float v : sdf.values) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        buf.push_back(static_cast<unsigned char>(bits & 0xFF));
        buf.push_back(static_cast<unsigned char>((bits >> 8) & 0xFF));
        buf.push_back(static_cast<unsigned char>((bits >> 16) & 0xFF));
        buf.push_back(static_cast<unsigned char>((bits >> 24) & 0xFF));
        if (buf.size() >= (1 << 20)) {
            f.write(reinterpret_cast<const char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    if (!buf.empty())
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
    if (!f) throw UserError("write failed: " + path);
}

SdfGrid load_sdf(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open: " + path);
    expect_magic(f, "ISDF", path);
    std::uint32_t r = read_u32(f, path);
    if (r < 8 || r > static_cast<std::uint32_t>(kMaxResolution))
        throw CacheCorrupt("sdf file resolution out of range: " + path);
    SdfGrid sdf(static_cast<int>(r));
    const size_t cells = sdf.values.size();
    std::vector<unsigned char> buf(cells * 4);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(f.gcount()) != buf.size())
        throw CacheCorrupt("sdf file truncated: " + path);
    if (f.peek() != std::char_traits<char>::eof())
        throw CacheCorrupt("sdf file has trailing bytes: " + path);
    const int R = sdf.resolution;
    for (size_t c = 0; c < cells; ++c) {
        std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * c]) |
                             (static_cast<std::uint32_t>(buf[4 * c + 1]) << 8) |
                             (static_cast<std::uint32_t>(buf[4 * c + 2]) << 16) |
                             (static_cast<std::uint32_t>(buf[4 * c + 3]) << 24);
        int i = static_cast<int>(c % R);
        int j = static_cast<int>((c / R) % R);
        int k = static_cast<int>(c / (static_cast<size_t>(R) * R));
        bool ok = inside_external_sphere(i, j, k, R);
        if (ok != (bits != kInvalidSdfBits))
            throw CacheCorrupt("sdf file validity mask mismatch: " + path);
        sdf.valid[c] = ok ? 1 : 0;
        sdf.values[c] = std::bit_cast<float>(bits);
    }
    return sdf;
}

} // namespace insphere
