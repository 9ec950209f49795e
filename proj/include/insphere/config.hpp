#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insphere/spheres.hpp"

namespace insphere {

/// Settings shared by every pipeline stage. The geometry fields (resolution,
/// sphere count, side, separation schedule) are bound into caches via
/// geometry_hash; changing any of them invalidates cached artifacts.
struct PipelineConfig {
    int resolution = 64;
    int spheres = 64;
    Side side = Side::Interior;
    std::vector<double> d_schedule{10.0, 5.0, 0.0}; // at 512 scale
    std::string net = "t2-256";
    std::uint64_t seed = 1;
    std::string data_root;
    std::string cache_dir;
};

/// Canonical geometry string, e.g. "R=64;n=64;side=interior;d=10,5,0".
std::string geometry_key(const PipelineConfig& cfg);

/// FNV-1a 64 over geometry_key.
std::uint64_t geometry_hash(const PipelineConfig& cfg);

std::uint64_t fnv1a64(const std::string& s);

/// key = value lines, '#' comments; unknown keys rejected.
PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& cfg, const std::string& path);

} // namespace insphere
