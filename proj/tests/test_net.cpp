#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "insphere/errors.hpp"
#include "insphere/net.hpp"
#include "insphere/spheres.hpp"
#include "test_support.hpp"

using namespace insphere;
namespace fs = std::filesystem;

namespace {

NetConfig tiny_config(int k = 3) {
    NetConfig cfg;
    cfg.input_dim = 4;
    cfg.mlp_dims = {8, 6};
    cfg.fc_dims = {5};
    cfg.k = k;
    return cfg;
}

SphereSample random_sample(std::mt19937_64& rng, int n, int label = 0) {
    SphereSample s;
    s.n = n;
    s.label = label;
    s.features.resize(static_cast<size_t>(n) * 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (float& f : s.features) f = static_cast<float>(u(rng));
    for (int r = 0; r < n; ++r)
        s.features[4 * static_cast<size_t>(r) + 3] =
            static_cast<float>(std::fabs(u(rng))); // radii stay positive
    return s;
}

std::vector<double> logits_of(SphereNetModel& model, const SphereSample& s) {
    return forward(model, s.features, 1, s.n);
}

/// Two-class fixture separable by sphere radius, the one feature the
/// training augmentation never perturbs; writes sphere caches and an
/// in-memory manifest so training needs no mesh pipeline.
DatasetManifest toy_manifest(testsup::TempDir& dir, int per_train, int per_test, int n) {
    auto rng = testsup::rng_for("net-toy");
    DatasetManifest mani;
    mani.classes = {"thin", "thick"};
    mani.requested_n = n;
    mani.cache_root = dir.str("cache");
    PipelineConfig cfg;
    cfg.resolution = 16;
    cfg.spheres = n;
    mani.config_hash = geometry_hash(cfg);
    mani.geometry = geometry_key(cfg);

    auto ri = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int label = 0; label < 2; ++label) {
        for (Split split : {Split::Train, Split::Test}) {
            int count = split == Split::Train ? per_train : per_test;
            std::string sub = mani.classes[label] + "/" + split_name(split);
            fs::create_directories(fs::path(mani.cache_root) / sub);
            for (int s = 0; s < count; ++s) {
                SphereSet set;
                set.resolution = 16;
                set.side = Side::Interior;
                set.n_requested = n;
                for (int r = 0; r < n; ++r) {
                    float rad = static_cast<float>(label == 0 ? ri(1, 2) : ri(5, 7));
                    set.spheres.push_back(
                        {{ri(1, 14), ri(1, 14), ri(1, 14)}, rad, Side::Interior, 1});
                }
                std::string rel = sub + "/obj_" + std::to_string(s) + ".isph";
                save_spheres(set, mani.cache_root + "/" + rel);
                mani.samples.push_back({rel, split, label, Side::Interior, n, 16});
            }
        }
    }
    return mani;
}

} // namespace

TEST_CASE("model accounting matches hand-computed presets") {
    // mlp 4->64->128->256 with bn, head 256->40
    ModelStats s256 = model_stats(net_preset("t2-256", 40), 1024);
    CHECK(s256.trainable_params == 52840);
    CHECK(s256.bn_buffers == 896);
    // mlp 4->64->128->512 with bn, fc 512->256, head 256->40
    ModelStats s512 = model_stats(net_preset("t2-512", 40), 1024);
    CHECK(s512.trainable_params == 218216);
    CHECK(s512.bn_buffers == 1920);
    // mlp 4->64->128->1024 with bn, fc 1024->512->256, head 256->40
    ModelStats s1024 = model_stats(net_preset("t2-1024", 40), 1024);
    CHECK(s1024.trainable_params == 811112);
    CHECK(s1024.bn_buffers == 3968);

    CHECK(s256.trainable_params < s1024.trainable_params);
    CHECK(s256.flops < s1024.flops);
    CHECK(s512.flops < s1024.flops);
    CHECK(s256.flops > 0);
}

TEST_CASE("model accounting matches a tiny worked example") {
    NetConfig cfg;
    cfg.input_dim = 2;
    cfg.mlp_dims = {3};
    cfg.fc_dims = {};
    cfg.k = 2;
    ModelStats s = model_stats(cfg, 5);
    CHECK(s.trainable_params == 9 + 6 + 8); // linear 2->3, bn affine, head 3->2
    CHECK(s.bn_buffers == 6);
    // 5 rows: linear 5*15, bn 2*3*5, pool 5 per channel, head 1*(2*3*2+2)
    CHECK(s.flops == 75 + 30 + 15 + 14);

    cfg.batch_norm = false;
    ModelStats nobn = model_stats(cfg, 5);
    CHECK(nobn.trainable_params == 9 + 8);
    CHECK(nobn.bn_buffers == 0);
    CHECK(nobn.flops == 75 + 15 + 14);
}

TEST_CASE("presets are fixed tables and unknown names fail") {
    NetConfig cfg = net_preset("t2-512", 10);
    CHECK(cfg.input_dim == 4);
    CHECK(cfg.mlp_dims == std::vector<int>{64, 128, 512});
    CHECK(cfg.fc_dims == std::vector<int>{256});
    CHECK(cfg.k == 10);
    CHECK(cfg.batch_norm);
    CHECK(cfg.dropout_keep == 0.7);
    CHECK_THROWS_AS(net_preset("t2-128", 10), UserError);
    CHECK_THROWS_AS(net_preset("", 10), UserError);
}

TEST_CASE("the flat layout covers every tensor exactly once") {
    NetConfig cfg = tiny_config();
    TensorLayout lay = make_layout(cfg);
    ModelStats stats = model_stats(cfg, 1);
    CHECK(lay.total == stats.trainable_params + stats.bn_buffers);
    CHECK(static_cast<std::int64_t>(lay.trainable.size()) == lay.total);
    std::int64_t trainable = 0;
    for (std::uint8_t t : lay.trainable) trainable += t;
    CHECK(trainable == stats.trainable_params);
    REQUIRE(lay.mlp.size() == 2);
    for (const auto& layer : lay.mlp) {
        CHECK(lay.trainable[static_cast<size_t>(layer.gamma)] == 1);
        CHECK(lay.trainable[static_cast<size_t>(layer.rmean)] == 0);
        CHECK(lay.trainable[static_cast<size_t>(layer.rvar)] == 0);
    }

    CHECK_THROWS_AS(make_layout(NetConfig{}), UserError); // no mlp layers
    NetConfig bad = tiny_config(1);
    CHECK_THROWS_AS(make_layout(bad), UserError);
}

TEST_CASE("initialization is seeded and respects the documented ranges") {
    NetConfig cfg = tiny_config();
    SphereNetModel a = init_model(cfg, 7, 123);
    SphereNetModel b = init_model(cfg, 7, 123);
    SphereNetModel c = init_model(cfg, 8, 123);
    CHECK(a.params == b.params);
    CHECK(a.params != c.params);
    CHECK(a.geometry_hash == 123);
    CHECK(a.adam_step == 0);

    const TensorLayout& lay = a.layout;
    const auto& first = lay.mlp[0];
    double limit = std::sqrt(6.0 / (first.in + first.out));
    for (int i = 0; i < first.in * first.out; ++i) {
        CHECK(std::fabs(a.params[static_cast<size_t>(first.w + i)]) <= limit);
    }
    for (int i = 0; i < first.out; ++i) {
        CHECK(a.params[static_cast<size_t>(first.b + i)] == 0.0);
        CHECK(a.params[static_cast<size_t>(first.gamma + i)] == 1.0);
        CHECK(a.params[static_cast<size_t>(first.beta + i)] == 0.0);
        CHECK(a.params[static_cast<size_t>(first.rmean + i)] == 0.0);
        CHECK(a.params[static_cast<size_t>(first.rvar + i)] == 1.0);
    }
}

TEST_CASE("inference logits are permutation invariant") {
    auto rng = testsup::rng_for("net-perm");
    SphereNetModel model = init_model(tiny_config(), 3);
    SphereSample s = random_sample(rng, 12);
    std::vector<double> base = logits_of(model, s);
    REQUIRE(base.size() == 3);

    for (int t = 0; t < 5; ++t) {
        SphereSample p = s;
        std::vector<int> perm(static_cast<size_t>(s.n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int r = 0; r < s.n; ++r)
            for (int c = 0; c < 4; ++c)
                p.features[4 * static_cast<size_t>(r) + c] =
                    s.features[4 * static_cast<size_t>(perm[static_cast<size_t>(r)]) + c];
        // max pooling sees the same value set, so equality is exact
        CHECK(logits_of(model, p) == base);
    }
}

TEST_CASE("duplicating rows never changes the logits") {
    auto rng = testsup::rng_for("net-dup");
    SphereNetModel model = init_model(tiny_config(), 11);
    SphereSample s = random_sample(rng, 9);
    std::vector<double> base = logits_of(model, s);

    SphereSample doubled;
    doubled.n = 18;
    for (int r = 0; r < 9; ++r)
        for (int copy = 0; copy < 2; ++copy)
            doubled.features.insert(doubled.features.end(),
                                    s.features.begin() + 4 * static_cast<size_t>(r),
                                    s.features.begin() + 4 * static_cast<size_t>(r + 1));
    CHECK(logits_of(model, doubled) == base);

    SphereSample padded = s; // repeat the last row, like dataset padding does
    padded.n = 14;
    for (int r = 9; r < 14; ++r)
        padded.features.insert(padded.features.end(),
                               s.features.begin() + 4 * static_cast<size_t>(8),
                               s.features.begin() + 4 * static_cast<size_t>(9));
    CHECK(logits_of(model, padded) == base);
}

TEST_CASE("critical spheres alone reproduce the logits") {
    auto rng = testsup::rng_for("net-critical");
    SphereNetModel model = init_model(tiny_config(), 5);
    SphereSample s = random_sample(rng, 16);
    std::vector<double> base = logits_of(model, s);

    std::vector<int> critical = critical_spheres(model, s);
    REQUIRE(!critical.empty());
    CHECK(static_cast<int>(critical.size()) <= s.n);
    for (size_t i = 1; i < critical.size(); ++i) CHECK(critical[i - 1] < critical[i]);
    CHECK(critical.front() >= 0);
    CHECK(critical.back() < s.n);

    SphereSample sub;
    sub.n = static_cast<int>(critical.size());
    for (int r : critical)
        sub.features.insert(sub.features.end(), s.features.begin() + 4 * static_cast<size_t>(r),
                            s.features.begin() + 4 * static_cast<size_t>(r + 1));
    CHECK(logits_of(model, sub) == base);
}

TEST_CASE("analytic gradients agree with finite differences") {
    auto rng = testsup::rng_for("net-gradcheck");
    SphereNetModel model = init_model(tiny_config(), 17);
    SphereSample s = random_sample(rng, 6, 1);
    double worst = gradient_check(model, s, 1e-5);
    CHECK(worst < 1e-4);

    NetConfig nobn = tiny_config();
    nobn.batch_norm = false;
    SphereNetModel plain = init_model(nobn, 5);
    CHECK(gradient_check(plain, s, 1e-5) < 1e-4);

    CHECK_THROWS_AS(gradient_check(model, s, 0.0), UserError);
}

TEST_CASE("training separates a toy dataset and logs the schedule") {
    testsup::TempDir dir("net");
    DatasetManifest mani = toy_manifest(dir, 16, 4, 4);
    NetConfig cfg;
    cfg.mlp_dims = {16, 16};
    cfg.fc_dims = {8};
    cfg.k = 2;
    SphereNetModel model = init_model(cfg, 3, mani.config_hash);
    TrainLog log = train(model, mani, 100, 3, "", 16);

    REQUIRE(log.size() == 100);
    CHECK(log[0].epoch == 0);
    CHECK(log[99].epoch == 99);
    CHECK(log[0].lr == 1e-3);
    CHECK(log[19].lr == 1e-3);
    CHECK(log[20].lr == doctest::Approx(7e-4).epsilon(1e-12)); // x0.7 every 20 epochs
    CHECK(std::isfinite(log.back().train_loss));
    CHECK(log.back().test_acc >= 0.9);

    // fit is judged in inference mode; train-time metrics carry batch-norm
    // and dropout noise by design
    EvalResult fit = evaluate(model, mani, Split::Train);
    CHECK(fit.overall >= 0.95);

    EvalResult ev = evaluate(model, mani, Split::Test);
    REQUIRE(ev.per_class_count.size() == 2);
    CHECK(ev.per_class_count[0] == 4);
    CHECK(ev.per_class_count[1] == 4);
    double weighted = (ev.per_class_acc[0] * 4 + ev.per_class_acc[1] * 4) / 8.0;
    CHECK(ev.overall == doctest::Approx(weighted).epsilon(1e-12));
    CHECK(ev.overall == log.back().test_acc);

    EvalResult prefix = evaluate(model, mani, Split::Test, 2);
    CHECK(prefix.overall >= 0.0);
    CHECK(prefix.overall <= 1.0);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    testsup::TempDir dir("net");
    DatasetManifest mani = toy_manifest(dir, 6, 2, 4);
    NetConfig cfg = tiny_config(2);

    SphereNetModel a = init_model(cfg, 5, mani.config_hash);
    TrainLog la = train(a, mani, 6, 11, "", 4);
    SphereNetModel b = init_model(cfg, 5, mani.config_hash);
    TrainLog lb = train(b, mani, 6, 11, "", 4);

    CHECK(a.params == b.params);
    REQUIRE(la.size() == lb.size());
    for (size_t i = 0; i < la.size(); ++i) {
        CHECK(la[i].train_loss == lb[i].train_loss);
        CHECK(la[i].train_acc == lb[i].train_acc);
        CHECK(la[i].test_acc == lb[i].test_acc);
    }

    SphereNetModel c = init_model(cfg, 5, mani.config_hash);
    TrainLog lc = train(c, mani, 6, 12, "", 4);
    CHECK(la.back().train_loss != lc.back().train_loss); // seed actually matters
}

TEST_CASE("inference never mutates the model") {
    auto rng = testsup::rng_for("net-frozen");
    SphereNetModel model = init_model(tiny_config(), 2);
    std::vector<double> before = model.params;
    SphereSample s = random_sample(rng, 8);
    std::vector<double> l1 = logits_of(model, s);
    std::vector<double> l2 = logits_of(model, s);
    CHECK(l1 == l2);
    CHECK(model.params == before); // running stats included
}

TEST_CASE("training validates its inputs") {
    testsup::TempDir dir("net");
    DatasetManifest mani = toy_manifest(dir, 2, 1, 4);
    SphereNetModel model = init_model(tiny_config(2), 1, mani.config_hash);
    CHECK_THROWS_AS(train(model, mani, 0, 1), UserError);
    CHECK_THROWS_AS(train(model, mani, 1, 1, "", 0), UserError);

    SphereNetModel wrong_k = init_model(tiny_config(3), 1, mani.config_hash);
    CHECK_THROWS_AS(train(wrong_k, mani, 1, 1), ShapeMismatch);
    CHECK_THROWS_AS(evaluate(wrong_k, mani, Split::Test), ShapeMismatch);

    DatasetManifest empty = mani;
    empty.samples.clear();
    CHECK_THROWS_AS(train(model, empty, 1, 1), EmptyDataset);
    CHECK_THROWS_AS(evaluate(model, empty, Split::Test), EmptyDataset);

    CHECK_THROWS_AS(forward(model, std::vector<float>(12, 0.0f), 1, 4), ShapeMismatch);
}

TEST_CASE("a poisoned model reports divergence instead of looping") {
    testsup::TempDir dir("net");
    DatasetManifest mani = toy_manifest(dir, 4, 1, 4);
    SphereNetModel model = init_model(tiny_config(2), 1, mani.config_hash);
    // poison the head bias: a poisoned mlp weight would be masked by relu
    model.params[static_cast<size_t>(model.layout.head.b)] =
        std::numeric_limits<double>::quiet_NaN();
    std::string ckpt = dir.str("diverged.inet");
    CHECK_THROWS_AS(train(model, mani, 3, 1, ckpt, 4), DivergedTraining);
    CHECK(fs::exists(ckpt)); // last finished state is still recoverable
}

TEST_CASE("checkpoints round-trip through f32 quantization") {
    testsup::TempDir dir("net");
    DatasetManifest mani = toy_manifest(dir, 4, 2, 4);
    NetConfig cfg = tiny_config(2);
    SphereNetModel model = init_model(cfg, 9, mani.config_hash);
    train(model, mani, 2, 9, "", 4);

    std::string p = dir.str("model.inet");
    save_checkpoint(model, p);
    SphereNetModel back = load_checkpoint(p);

    CHECK(back.config.name == cfg.name);
    CHECK(back.config.input_dim == cfg.input_dim);
    CHECK(back.config.mlp_dims == cfg.mlp_dims);
    CHECK(back.config.fc_dims == cfg.fc_dims);
    CHECK(back.config.k == cfg.k);
    CHECK(back.config.batch_norm == cfg.batch_norm);
    CHECK(back.config.dropout_keep == doctest::Approx(cfg.dropout_keep).epsilon(1e-7));
    CHECK(back.geometry_hash == mani.config_hash);
    CHECK(back.adam_step == 0); // optimizer state is not persisted
    REQUIRE(back.params.size() == model.params.size());
    for (size_t i = 0; i < model.params.size(); ++i)
        CHECK(back.params[i] == static_cast<double>(static_cast<float>(model.params[i])));
}

TEST_CASE("checkpoint corruption is detected") {
    testsup::TempDir dir("net");
    SphereNetModel model = init_model(tiny_config(2), 1);
    std::string p = dir.str("m.inet");
    save_checkpoint(model, p);

    std::string bytes;
    {
        std::ifstream in(p, std::ios::binary);
        bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    auto write_file = [&](const std::string& name, const std::string& data) {
        std::string q = dir.str(name);
        std::ofstream out(q, std::ios::binary);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        return q;
    };
    CHECK_THROWS_AS(load_checkpoint(write_file("clip.inet", bytes.substr(0, bytes.size() - 3))),
                    CacheCorrupt);
    CHECK_THROWS_AS(load_checkpoint(write_file("extra.inet", bytes + "x")), CacheCorrupt);
    std::string mangled = bytes;
    mangled[0] = 'X';
    CHECK_THROWS_AS(load_checkpoint(write_file("magic.inet", mangled)), CacheCorrupt);
    CHECK_THROWS_AS(load_checkpoint(dir.str("absent.inet")), UserError);
}

TEST_CASE("the training csv freezes its byte format") {
    testsup::TempDir dir("net");
    TrainLog log;
    log.push_back({0, 1e-3, 0.51234567, 0.5, 0.25});
    log.push_back({1, 1e-3, 0.25, 0.75, 1.0});
    std::string p = dir.str("log.csv");
    write_training_csv(log, p);
    std::ifstream f(p, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text ==
          "epoch,train_loss,train_acc,test_acc\n"
          "0,0.512346,0.500000,0.250000\n"
          "1,0.250000,0.750000,1.000000\n");
}
