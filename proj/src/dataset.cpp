#include "insphere/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "insphere/errors.hpp"
#include "insphere/mesh.hpp"
#include "insphere/parallel.hpp"
#include "insphere/sdf.hpp"

namespace fs = std::filesystem;

namespace insphere {

const char* split_name(Split split) { return split == Split::Train ? "train" : "test"; }

static Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw CacheCorrupt("manifest: unknown split " + s);
}

std::vector<int> DatasetManifest::split_indices(Split split) const {
    std::vector<int> out;
    for (size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == split) out.push_back(static_cast<int>(i));
    return out;
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Job {
    std::string off_path;
    std::string rel_cache;
    Split split;
    int label;
};

// Returns the cached sphere count; throws on conversion failure.
int convert_one(const Job& job, const PipelineConfig& cfg, const std::string& cache_root) {
    fs::path out = fs::path(cache_root) / job.rel_cache;
    if (fs::exists(out)) {
        try {
            SphereSet cached = load_spheres(out.string());
            if (cached.resolution == cfg.resolution)
                return static_cast<int>(cached.spheres.size());
        } catch (const DataError&) {
            // fall through and rebuild
        }
    }
    TriangleMesh mesh = normalize(load_off(job.off_path));
    VoxelGrid grid = voxelize_solid(mesh, cfg.resolution);
    SdfGrid sdf = compute_sdf(grid);
    SphereSet set;
    if (cfg.side == Side::Mixed)
        set = build_mixed(sdf, grid, cfg.spheres / 2, cfg.spheres - cfg.spheres / 2,
                          cfg.d_schedule);
    else
        set = build_spheres(sdf, grid, cfg.side, cfg.spheres, cfg.d_schedule);
    fs::create_directories(out.parent_path());
    save_spheres(set, out.string());
    return static_cast<int>(set.spheres.size());
}

} // namespace

DatasetManifest ingest(const std::string& root, const PipelineConfig& cfg) {
    if (!fs::is_directory(root)) throw UserError("dataset root is not a directory: " + root);
    std::string cache_root = cfg.cache_dir.empty()
                                 ? (fs::path(root) / ".insphere-cache").string()
                                 : cfg.cache_dir;
    fs::create_directories(cache_root);

    DatasetManifest mani;
    mani.requested_n = cfg.spheres;
    mani.config_hash = geometry_hash(cfg);
    mani.geometry = geometry_key(cfg);
    mani.cache_root = cache_root;

    // The sentinel pins the geometry the cache was built under; a rerun with
    // different geometry must not silently mix artifacts.
    fs::path sentinel = fs::path(cache_root) / "config.hash";
    std::string want = hash_hex(mani.config_hash) + "\n" + mani.geometry + "\n";
    if (fs::exists(sentinel)) {
        std::ifstream in(sentinel);
        std::stringstream have;
        have << in.rdbuf();
        if (have.str() != want)
            throw ConfigMismatch("cache root " + cache_root +
                                 " was built under a different geometry; found \"" +
                                 have.str() + "\", expected \"" + want + "\"");
    } else {
        std::ofstream outf(sentinel);
        outf << want;
        if (!outf) throw UserError("cannot write " + sentinel.string());
    }

    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        if (name.empty() || name[0] == '.') continue;
        if (fs::is_directory(entry.path() / "train") || fs::is_directory(entry.path() / "test"))
            mani.classes.push_back(name);
    }
    std::sort(mani.classes.begin(), mani.classes.end());
    if (mani.classes.size() < 2)
        throw EmptyDataset("need at least 2 class directories under " + root);

    std::vector<Job> jobs;
    for (size_t label = 0; label < mani.classes.size(); ++label) {
        for (Split split : {Split::Train, Split::Test}) {
            fs::path dir = fs::path(root) / mani.classes[label] / split_name(split);
            if (!fs::is_directory(dir)) continue;
            std::vector<std::string> names;
            for (const auto& f : fs::directory_iterator(dir))
                if (f.is_regular_file() && f.path().extension() == ".off")
                    names.push_back(f.path().filename().string());
            std::sort(names.begin(), names.end());
            for (const std::string& n : names) {
                Job job;
                job.off_path = (dir / n).string();
                job.rel_cache = mani.classes[label] + "/" + split_name(split) + "/" +
                                fs::path(n).stem().string() + ".isph";
                job.split = split;
                job.label = static_cast<int>(label);
                jobs.push_back(std::move(job));
            }
        }
    }
    if (jobs.empty()) throw EmptyDataset("no .off files under " + root);

    struct Result {
        int built = -1;
        std::string error;
    };
    std::vector<Result> results(jobs.size());
    parallel_for(static_cast<std::int64_t>(jobs.size()), [&](std::int64_t begin,
                                                             std::int64_t end) {
        for (std::int64_t j = begin; j < end; ++j) {
            try {
                results[j].built = convert_one(jobs[j], cfg, cache_root);
            } catch (const std::exception& e) {
                results[j].error = e.what();
            }
        }
    });

    for (size_t j = 0; j < jobs.size(); ++j) {
        if (results[j].built < 0) {
            std::cerr << "insphere: skipping " << jobs[j].off_path << ": " << results[j].error
                      << "\n";
            continue;
        }
        SampleEntry e;
        e.rel_path = jobs[j].rel_cache;
        e.split = jobs[j].split;
        e.label = jobs[j].label;
        e.side = cfg.side;
        e.built = results[j].built;
        e.resolution = cfg.resolution;
        mani.samples.push_back(std::move(e));
    }
    if (mani.samples.empty()) throw EmptyDataset("every mesh under " + root + " failed to convert");

    save_manifest(mani, (fs::path(cache_root) / "manifest.txt").string());
    return mani;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw UserError("cannot open for writing: " + path);
    f << "insphere-manifest v1\n";
    f << "hash " << hash_hex(manifest.config_hash) << "\n";
    f << "key " << manifest.geometry << "\n";
    f << "requested " << manifest.requested_n << "\n";
    f << "classes " << manifest.classes.size() << "\n";
    for (const std::string& c : manifest.classes) f << "class " << c << "\n";
    f << "samples " << manifest.samples.size() << "\n";
    for (const SampleEntry& e : manifest.samples)
        f << "sample " << split_name(e.split) << " " << e.label << " " << side_name(e.side)
          << " " << e.built << " " << e.resolution << " " << e.rel_path << "\n";
    if (!f) throw UserError("write failed: " + path);
}

DatasetManifest load_manifest(const std::string& cache_root) {
    std::string path = (fs::path(cache_root) / "manifest.txt").string();
    std::ifstream f(path);
    if (!f) throw UserError("cannot open manifest: " + path);
    DatasetManifest mani;
    mani.cache_root = cache_root;

    auto bad = [&path](const std::string& why) -> CacheCorrupt {
        return CacheCorrupt("manifest " + path + ": " + why);
    };
    std::string line;
    if (!std::getline(f, line) || line != "insphere-manifest v1") throw bad("bad header");

    auto expect_kv = [&](const char* keyword) -> std::string {
        if (!std::getline(f, line)) throw bad(std::string("missing ") + keyword);
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key != keyword) throw bad("expected " + std::string(keyword) + ", got " + key);
        std::string rest;
        std::getline(ss, rest);
        size_t b = rest.find_first_not_of(' ');
        return b == std::string::npos ? "" : rest.substr(b);
    };

    mani.config_hash = std::stoull(expect_kv("hash"), nullptr, 16);
    mani.geometry = expect_kv("key");
    mani.requested_n = std::stoi(expect_kv("requested"));
    size_t n_classes = std::stoul(expect_kv("classes"));
    for (size_t i = 0; i < n_classes; ++i) mani.classes.push_back(expect_kv("class"));
    size_t n_samples = std::stoul(expect_kv("samples"));
    for (size_t i = 0; i < n_samples; ++i) {
        if (!std::getline(f, line)) throw bad("missing sample line");
        std::istringstream ss(line);
        std::string key, split, side;
        SampleEntry e;
        ss >> key >> split >> e.label >> side >> e.built >> e.resolution;
        if (!ss || key != "sample") throw bad("bad sample line: " + line);
        e.split = parse_split(split);
        e.side = parse_side(side);
        std::string rest;
        std::getline(ss, rest);
        size_t b = rest.find_first_not_of(' ');
        if (b == std::string::npos) throw bad("sample line missing path: " + line);
        e.rel_path = rest.substr(b);
        if (e.label < 0 || e.label >= static_cast<int>(mani.classes.size()))
            throw bad("label out of range: " + line);
        mani.samples.push_back(std::move(e));
    }
    return mani;
}

SphereSample sample_from_set(const SphereSet& set, int n, int label,
                             std::mt19937_64* aug_rng) {
    if (n < 1) throw UserError("sample_from_set: row count must be >= 1");
    if (set.spheres.empty()) throw CacheCorrupt("sphere set has no spheres");

    SphereSample s;
    s.label = label;
    s.n = n;
    s.padded = static_cast<int>(set.spheres.size()) < n;
    s.features.resize(static_cast<size_t>(n) * 4);
    const int R = set.resolution;
    int rows = std::min(static_cast<int>(set.spheres.size()), n);

    double rc = 1.0, rs = 0.0;
    std::normal_distribution<double> noise(0.0, 0.01);
    if (aug_rng) {
        double theta = std::uniform_real_distribution<double>(0.0, 2.0 * 3.14159265358979323846)(
            *aug_rng);
        rc = std::cos(theta);
        rs = std::sin(theta);
    }
    auto jitter = [&]() {
        return std::clamp(noise(*aug_rng), -0.05, 0.05);
    };
    for (int r = 0; r < rows; ++r) {
        const InfillingSphere& sp = set.spheres[r];
        double x = (2.0 * sp.center[0] + 1.0) / R - 1.0;
        double y = (2.0 * sp.center[1] + 1.0) / R - 1.0;
        double z = (2.0 * sp.center[2] + 1.0) / R - 1.0;
        double rad = std::min(1.0, 2.0 * static_cast<double>(sp.radius) / R);
        if (aug_rng) {
            double xr = x * rc + z * rs;
            double zr = -x * rs + z * rc;
            x = xr + jitter();
            y = y + jitter();
            z = zr + jitter();
        }
        s.features[4 * static_cast<size_t>(r) + 0] = static_cast<float>(x);
        s.features[4 * static_cast<size_t>(r) + 1] = static_cast<float>(y);
        s.features[4 * static_cast<size_t>(r) + 2] = static_cast<float>(z);
        s.features[4 * static_cast<size_t>(r) + 3] = static_cast<float>(rad);
    }
    for (int r = rows; r < n; ++r)
        for (int c = 0; c < 4; ++c)
            s.features[4 * static_cast<size_t>(r) + c] =
                s.features[4 * static_cast<size_t>(rows - 1) + c];
    return s;
}

std::vector<SphereSample> load_batch(const DatasetManifest& manifest, Split split,
                                     const std::vector<int>& indices, int n,
                                     std::mt19937_64* aug_rng) {
    if (n < 1) throw UserError("load_batch: row count must be >= 1");
    std::vector<int> order = manifest.split_indices(split);
    std::vector<SphereSample> out;
    out.reserve(indices.size());
    for (int pos : indices) {
        if (pos < 0 || pos >= static_cast<int>(order.size()))
            throw UserError("load_batch: index " + std::to_string(pos) + " outside split of " +
                            std::to_string(order.size()));
        const SampleEntry& e = manifest.samples[order[pos]];
        SphereSet set = load_spheres(manifest.cache_root + "/" + e.rel_path);
        if (set.spheres.empty()) throw CacheCorrupt("empty sphere cache: " + e.rel_path);
        out.push_back(sample_from_set(set, n, e.label, aug_rng));
    }
    return out;
}

SphereSample load_sample(const DatasetManifest& manifest, Split split, int index, int n) {
    return load_batch(manifest, split, {index}, n).front();
}

} // namespace insphere
