#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "insphere/mesh.hpp"
#include "insphere/shapes.hpp"
#include "insphere/spheres.hpp"
#include "insphere/voxel.hpp"
#include "test_support.hpp"

using namespace insphere;
namespace fs = std::filesystem;

namespace {

const std::string kCli = INSPHERE_CLI_PATH;

int run(const std::string& args, const std::string& log_path) {
    std::string cmd = kCli + " " + args + " > " + log_path + " 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("help exits cleanly, bad invocations exit 1") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    CHECK(run("--help", log) == 0);
    CHECK(slurp(log).find("voxelize") != std::string::npos);
    CHECK(run("frobnicate", log) == 1);
    CHECK(run("", log) == 1); // a subcommand is required
    CHECK(run("voxelize", log) == 1);
    CHECK(run("voxelize " + dir.str("missing.off") + " --out " + dir.str("x.ivox"), log) == 1);
}

TEST_CASE("voxelize, sdf and spheres chain on a mesh") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    std::string off = dir.str("box.off");
    save_off(normalize(make_box({-0.4, -0.3, -0.2}, {0.4, 0.3, 0.2})), off);

    std::string ivox = dir.str("box.ivox");
    CHECK(run("voxelize " + off + " --out " + ivox + " --resolution 16", log) == 0);
    CHECK(slurp(log).find("occupied") != std::string::npos);
    VoxelGrid grid = load_voxels(ivox);
    CHECK(grid.resolution == 16);

    std::string isdf = dir.str("box.isdf");
    CHECK(run("sdf " + ivox + " --out " + isdf, log) == 0);
    CHECK(fs::exists(isdf));

    // .off input works too and produces the identical grid pipeline
    std::string isdf2 = dir.str("box2.isdf");
    CHECK(run("sdf " + off + " --out " + isdf2 + " --resolution 16", log) == 0);
    CHECK(slurp(isdf) == slurp(isdf2));

    std::string isph = dir.str("box.isph");
    CHECK(run("spheres " + ivox + " --out " + isph + " --spheres 12", log) == 0);
    SphereSet set = load_spheres(isph);
    CHECK(set.resolution == 16);
    CHECK(!set.spheres.empty());
    CHECK(slurp(log).find("spheres:") != std::string::npos);

    // explicit side and schedule are honored
    std::string isph2 = dir.str("box-ext.isph");
    CHECK(run("spheres " + ivox + " --out " + isph2 +
                  " --spheres 6 --side exterior --schedule 8,2,0",
              log) == 0);
    CHECK(load_spheres(isph2).side == Side::Exterior);
}

TEST_CASE("data errors exit 2, user errors exit 1") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    std::string bad = dir.str("bad.ivox");
    {
        std::ofstream f(bad, std::ios::binary);
        f << "IVOXgarbage";
    }
    CHECK(run("sdf " + bad + " --out " + dir.str("x.isdf"), log) == 2);

    std::string off = dir.str("tet.off");
    save_off(normalize(make_tetrahedron()), off);
    CHECK(run("voxelize " + off + " --out " + dir.str("t.ivox") + " --resolution 4", log) == 1);
    CHECK(run("spheres " + off + " --out " + dir.str("t.isph") + " --side inward", log) == 1);
    CHECK(run("voxelize " + off + " --out " + dir.str("t.ivox") + " --resolution 9999", log) ==
          1);

    std::string text = dir.str("plain.txt");
    {
        std::ofstream f(text);
        f << "hello\n";
    }
    CHECK(run("sdf " + text + " --out " + dir.str("x.isdf"), log) == 1); // unsupported format
}

TEST_CASE("stats prints exact counts and the parameter-count note") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    CHECK(run("stats --all --classes 40 --n 1024", log) == 0);
    std::string out = slurp(log);
    CHECK(out.find("52840") != std::string::npos);
    CHECK(out.find("218216") != std::string::npos);
    CHECK(out.find("811112") != std::string::npos);
    CHECK(out.find("100000") != std::string::npos); // the t2-256 parameter-count note
    CHECK(run("stats --net t2-256 --classes 40 --n 1024", log) == 0);
    CHECK(slurp(log).find("52840") != std::string::npos);
    CHECK(run("stats --net t2-999", log) == 1);
}

TEST_CASE("the full pipeline runs end to end") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    std::string root = dir.str("data");
    std::string common = " --resolution 16 --spheres 8 --side interior --seed 1";

    CHECK(run("gendata " + root + " --classes 2 --train 3 --test 2 --seed 7", log) == 0);
    CHECK(fs::is_directory(root));
    int off_files = 0;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::end(it); ++it)
        if (it->path().extension() == ".off") ++off_files;
    CHECK(off_files == 2 * (3 + 2));

    CHECK(run("ingest " + root + common, log) == 0);
    std::string cache = root + "/.insphere-cache";
    CHECK(fs::exists(fs::path(cache) / "manifest.txt"));

    std::string model = dir.str("model.inet");
    std::string csv = dir.str("train.csv");
    CHECK(run("train " + cache + common + " --epochs 2 --batch 4 --out " + model + " --csv " +
                  csv,
              log) == 0);
    CHECK(fs::exists(model));
    std::string csv_text = slurp(csv);
    CHECK(csv_text.rfind("epoch,train_loss,train_acc,test_acc\n", 0) == 0);

    std::string eval_csv = dir.str("eval.csv");
    CHECK(run("eval " + cache + " --model " + model + " --split test --out " + eval_csv, log) ==
          0);
    CHECK(slurp(log).find("accuracy") != std::string::npos);
    std::string eval_text = slurp(eval_csv);
    CHECK(eval_text.rfind("class,count,accuracy\n", 0) == 0);
    CHECK(eval_text.find("overall,") != std::string::npos);

    std::string sweep_csv = dir.str("sweep.csv");
    CHECK(run("sweep " + cache + " --model " + model + " --counts 8,4 --out " + sweep_csv,
              log) == 0);
    std::string sweep_text = slurp(sweep_csv);
    CHECK(sweep_text.rfind("n,accuracy\n", 0) == 0);
    CHECK(sweep_text.find("\n8,") != std::string::npos);
    CHECK(sweep_text.find("\n4,") != std::string::npos);

    CHECK(run("critical " + cache + " --model " + model + " --split test --index 0", log) == 0);
    CHECK(slurp(log).find("critical:") != std::string::npos);

    // a checkpoint trained under one geometry refuses another cache
    std::string other_root = dir.str("other");
    CHECK(run("gendata " + other_root + " --classes 2 --train 2 --test 1 --seed 8", log) == 0);
    CHECK(run("ingest " + other_root + " --resolution 16 --spheres 6 --side interior --seed 1",
              log) == 0);
    CHECK(run("eval " + other_root + "/.insphere-cache --model " + model + " --split test",
              log) == 2);

    // sweep counts above the trained width are user errors
    CHECK(run("sweep " + cache + " --model " + model + " --counts 16 --out " +
                  dir.str("s2.csv"),
              log) == 1);
}

TEST_CASE("export subcommand renders a sphere file") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    std::string off = dir.str("ball.off");
    save_off(normalize(make_icosphere(2)), off);
    std::string isph = dir.str("ball.isph");
    CHECK(run("spheres " + off + " --out " + isph + " --resolution 16 --spheres 6", log) == 0);

    std::string ply = dir.str("ball.ply");
    CHECK(run("export " + isph + " --out " + ply + " --format ply --critical 0,1", log) == 0);
    std::string text = slurp(ply);
    CHECK(text.rfind("ply\n", 0) == 0);
    CHECK(text.find("element vertex") != std::string::npos);

    CHECK(run("export " + isph + " --out " + dir.str("x.stl") + " --format stl", log) == 1);
    CHECK(run("export " + isph + " --out " + dir.str("x.ply") + " --critical 999", log) == 1);
}

TEST_CASE("config files feed every stage and flags override them") {
    testsup::TempDir dir("cli");
    std::string log = dir.str("log.txt");
    std::string cfg = dir.str("pipe.cfg");
    {
        std::ofstream f(cfg);
        f << "resolution = 16\nspheres = 6\nside = interior\nseed = 3\n";
    }
    std::string off = dir.str("box.off");
    save_off(normalize(make_box({-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4})), off);

    std::string a = dir.str("a.isph");
    CHECK(run("spheres " + off + " --out " + a + " --config " + cfg, log) == 0);
    CHECK(load_spheres(a).resolution == 16);

    std::string b = dir.str("b.isph");
    CHECK(run("spheres " + off + " --out " + b + " --config " + cfg + " --resolution 24", log) ==
          0);
    CHECK(load_spheres(b).resolution == 24); // flag wins over the config file

    CHECK(run("spheres " + off + " --out " + dir.str("c.isph") + " --config " +
                  dir.str("absent.cfg"),
              log) == 1);
}
