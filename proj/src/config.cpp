#include "insphere/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "insphere/errors.hpp"

namespace insphere {
namespace {

// Shortest exact decimal; schedules are human-entered values like 10, 5, 0,
// so the canonical key stays readable. Integral values print as integers
// ("10", never "1e+01"): the key is hashed, so its spelling is contractual.
std::string format_double(double v) {
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        char ibuf[32];
        std::snprintf(ibuf, sizeof ibuf, "%lld", static_cast<long long>(v));
        return ibuf;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = std::strtod(buf, nullptr);
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[64];
        std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == back) return shorter;
    }
    return buf;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& v, const std::string& key) {
    char* end = nullptr;
    long long n = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw UserError("config: bad integer for " + key + ": " + v);
    return n;
}

double parse_real(const std::string& v, const std::string& key) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw UserError("config: bad number for " + key + ": " + v);
    return d;
}

} // namespace

std::string geometry_key(const PipelineConfig& cfg) {
    std::string d;
    for (size_t i = 0; i < cfg.d_schedule.size(); ++i) {
        if (i) d += ',';
        d += format_double(cfg.d_schedule[i]);
    }
    return "R=" + std::to_string(cfg.resolution) + ";n=" + std::to_string(cfg.spheres) +
           ";side=" + side_name(cfg.side) + ";d=" + d;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t geometry_hash(const PipelineConfig& cfg) { return fnv1a64(geometry_key(cfg)); }

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UserError("cannot open config: " + path);
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError("config: line " + std::to_string(lineno) + " is not key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "resolution") {
            cfg.resolution = static_cast<int>(parse_int(val, key));
        } else if (key == "spheres") {
            cfg.spheres = static_cast<int>(parse_int(val, key));
        } else if (key == "side") {
            cfg.side = parse_side(val);
        } else if (key == "d_schedule") {
            cfg.d_schedule.clear();
            std::stringstream ss(val);
            std::string part;
            while (std::getline(ss, part, ','))
                cfg.d_schedule.push_back(parse_real(trim(part), key));
            if (cfg.d_schedule.empty()) throw UserError("config: empty d_schedule");
        } else if (key == "net") {
            cfg.net = val;
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(val, key));
        } else if (key == "data_root") {
            cfg.data_root = val;
        } else if (key == "cache_dir") {
            cfg.cache_dir = val;
        } else {
            throw UserError("config: unknown key '" + key + "' at line " +
                            std::to_string(lineno));
        }
    }
    return cfg;
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw UserError("cannot open for writing: " + path);
    f << "resolution = " << cfg.resolution << "\n";
    f << "spheres = " << cfg.spheres << "\n";
    f << "side = " << side_name(cfg.side) << "\n";
    f << "d_schedule = ";
    for (size_t i = 0; i < cfg.d_schedule.size(); ++i)
        f << (i ? "," : "") << format_double(cfg.d_schedule[i]);
    f << "\n";
    f << "net = " << cfg.net << "\n";
    f << "seed = " << cfg.seed << "\n";
    if (!cfg.data_root.empty()) f << "data_root = " << cfg.data_root << "\n";
    if (!cfg.cache_dir.empty()) f << "cache_dir = " << cfg.cache_dir << "\n";
    if (!f) throw UserError("write failed: " + path);
}

} // namespace insphere
