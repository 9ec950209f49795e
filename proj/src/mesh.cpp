#include "insphere/mesh.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "insphere/errors.hpp"

namespace insphere {

Aabb TriangleMesh::bounds() const {
    Aabb box;
    for (const auto& v : vertices) box.expand(v);
    return box;
}

namespace {

// Splits a line into whitespace-separated tokens.
std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, const std::string& path) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + tok.size())
        throw ParseError(path + ": non-numeric token '" + tok + "'");
    return v;
}

long parse_long(const std::string& tok, const std::string& path) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    long v = std::strtol(begin, &end, 10);
    if (end != begin + tok.size())
        throw ParseError(path + ": non-numeric token '" + tok + "'");
    return v;
}

struct LineReader {
    std::vector<std::string> lines;
    size_t pos = 0;

    explicit LineReader(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }

    // Next non-empty, non-comment line, or nullptr at end of file.
    const std::string* next() {
        while (pos < lines.size()) {
            const std::string& l = lines[pos++];
            size_t i = l.find_first_not_of(" \t");
            if (i == std::string::npos) continue;
            if (l[i] == '#') continue;
            return &lines[pos - 1];
        }
        return nullptr;
    }
};

} // namespace

TriangleMesh load_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open mesh file: " + path);

    LineReader reader(in);
    const std::string* header = reader.next();
    if (!header) throw ParseError(path + ": empty file");

    std::vector<std::string> header_toks = tokenize(*header);
    std::vector<std::string> count_toks;
    if (header_toks[0] == "OFF") {
        if (header_toks.size() > 1)
            count_toks.assign(header_toks.begin() + 1, header_toks.end());
    } else if (header_toks[0].rfind("OFF", 0) == 0) {
        // ModelNet quirk: counts glued to the header token ("OFF490 312 0").
        count_toks.push_back(header_toks[0].substr(3));
        count_toks.insert(count_toks.end(), header_toks.begin() + 1, header_toks.end());
    } else {
        throw ParseError(path + ": missing OFF header");
    }

    if (count_toks.empty()) {
        const std::string* counts = reader.next();
        if (!counts) throw ParseError(path + ": missing vertex/face counts");
        count_toks = tokenize(*counts);
    }
    if (count_toks.size() < 2) throw ParseError(path + ": malformed counts line");

    long n_vertices = parse_long(count_toks[0], path);
    long n_faces = parse_long(count_toks[1], path);
    if (n_vertices < 0 || n_faces < 0) throw ParseError(path + ": negative counts");
    if (n_vertices == 0 || n_faces == 0) throw EmptyMesh(path + ": mesh has no faces");

    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<size_t>(n_vertices));
    for (long i = 0; i < n_vertices; ++i) {
        const std::string* line = reader.next();
        if (!line)
            throw ParseError(path + ": expected " + std::to_string(n_vertices) +
                             " vertices, file ends after " + std::to_string(i));
        std::vector<std::string> toks = tokenize(*line);
        if (toks.size() < 3) throw ParseError(path + ": vertex line with <3 coordinates");
        mesh.vertices.emplace_back(parse_double(toks[0], path), parse_double(toks[1], path),
                                   parse_double(toks[2], path));
    }

    mesh.faces.reserve(static_cast<size_t>(n_faces));
    for (long f = 0; f < n_faces; ++f) {
        const std::string* line = reader.next();
        if (!line)
            throw ParseError(path + ": expected " + std::to_string(n_faces) +
                             " faces, file ends after " + std::to_string(f));
        std::vector<std::string> toks = tokenize(*line);
        long nv = toks.empty() ? 0 : parse_long(toks[0], path);
        if (nv < 3) throw ParseError(path + ": face with fewer than 3 vertices");
        if (static_cast<long>(toks.size()) < nv + 1)
            throw ParseError(path + ": face line shorter than its vertex count");
        std::vector<int> idx(static_cast<size_t>(nv));
        for (long m = 0; m < nv; ++m) {
            long v = parse_long(toks[static_cast<size_t>(m + 1)], path);
            if (v < 0 || v >= n_vertices)
                throw ParseError(path + ": face index " + std::to_string(v) + " out of range");
            idx[static_cast<size_t>(m)] = static_cast<int>(v);
        }
        for (size_t m = 1; m + 1 < idx.size(); ++m)
            mesh.faces.push_back({idx[0], idx[m], idx[m + 1]});
    }
    return mesh;
}

void save_off(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot write mesh file: " + path);
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
    out.precision(17);
    for (const auto& v : mesh.vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

TriangleMesh normalize(const TriangleMesh& mesh) {
    if (mesh.empty()) throw EmptyMesh("normalize: empty mesh");

    Aabb box = mesh.bounds();
    Vec3 extent = box.extent();
    double max_extent = std::max({extent.x, extent.y, extent.z});
    if (max_extent <= 0.0) throw DegenerateMesh("normalize: mesh has zero extent on all axes");

    // Already normalized meshes pass through unchanged; together with the
    // exact endpoint mapping below this makes normalize bit-idempotent.
    bool centered = (box.lo.x + box.hi.x == 0.0) && (box.lo.y + box.hi.y == 0.0) &&
                    (box.lo.z + box.hi.z == 0.0);
    if (centered && max_extent == 1.0) return mesh;

    // Per axis map v -> ((v - lo)/e - 0.5) * w with w = e / max_extent.
    // (v - lo)/e is exactly 0 at lo and exactly 1 at hi, so the output box is
    // exactly [-w/2, w/2] per axis and the longest axis lands on extent 1.
    Vec3 width{extent.x / max_extent, extent.y / max_extent, extent.z / max_extent};
    TriangleMesh out;
    out.faces = mesh.faces;
    out.label = mesh.label;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) {
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            double e = extent[a];
            p[a] = (e == 0.0) ? 0.0 : ((v[a] - box.lo[a]) / e - 0.5) * width[a];
        }
        out.vertices.push_back(p);
    }
    return out;
}

} // namespace insphere
