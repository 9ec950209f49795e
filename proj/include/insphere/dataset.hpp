#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "insphere/config.hpp"
#include "insphere/spheres.hpp"

namespace insphere {

enum class Split { Train, Test };

const char* split_name(Split split);

/// One cached object, referenced from the manifest.
struct SampleEntry {
    std::string rel_path; // under the cache root
    Split split;
    int label;
    Side side;
    int built; // spheres actually constructed (< requested means padding)
    int resolution;
};

struct DatasetManifest {
    std::vector<std::string> classes; // sorted; index = label
    std::vector<SampleEntry> samples;
    int requested_n = 0;
    std::uint64_t config_hash = 0;
    std::string geometry; // canonical geometry key the hash covers
    std::string cache_root;

    std::vector<int> split_indices(Split split) const;
};

/// Feature matrix for one object: rows of (x, y, z, r), centers mapped to
/// (-1,1) via (2i+1)/R - 1 and radius divided by R/2 (clamped to 1).
struct SphereSample {
    std::vector<float> features; // n*4 row-major
    int label = 0;
    int n = 0;
    bool padded = false; // rows repeated because the builder returned < n
};

/// Walks root/<class>/{train,test}/*.off, runs mesh -> voxels -> SDF ->
/// spheres for every object, caches "ISPH" files under the cache root, and
/// writes manifest.txt. Reruns skip existing loadable caches; a cache root
/// created under a different geometry raises ConfigMismatch (config.hash
/// sentinel). Individual mesh failures are logged to stderr and skipped.
DatasetManifest ingest(const std::string& root, const PipelineConfig& cfg);

DatasetManifest load_manifest(const std::string& cache_root);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// Loads features for sample positions `indices` within the given split,
/// truncating or padding each to n rows. When aug_rng is non-null (training
/// only) each sample is rotated about the y axis by a uniform angle and its
/// centers are jittered with sigma 0.01 Gaussian noise clipped to +-0.05;
/// radii are never touched.
std::vector<SphereSample> load_batch(const DatasetManifest& manifest, Split split,
                                     const std::vector<int>& indices, int n,
                                     std::mt19937_64* aug_rng = nullptr);

/// Single-sample convenience wrapper over load_batch.
SphereSample load_sample(const DatasetManifest& manifest, Split split, int index, int n);

/// The transform load_batch applies to one cached set: normalize, optionally
/// augment, truncate or pad to n rows.
SphereSample sample_from_set(const SphereSet& set, int n, int label = 0,
                             std::mt19937_64* aug_rng = nullptr);

} // namespace insphere
