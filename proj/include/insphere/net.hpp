#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "insphere/dataset.hpp"

namespace insphere {

/// Architecture description: shared per-sphere MLP (linear + batch norm +
/// ReLU per layer), channel-wise max pool over the sphere axis, then an FC
/// head ending in a plain linear layer to k logits. fc_dims may be empty
/// (single linear head). Dropout (inverted, keep probability below) applies
/// to the last hidden FC activation during training.
struct NetConfig {
    int input_dim = 4;
    std::vector<int> mlp_dims;
    std::vector<int> fc_dims;
    int k = 2;
    bool batch_norm = true;
    double dropout_keep = 0.7;
    std::string name = "custom";
};

/// Table presets: t2-1024 = mlp(4,64,128,1024) fc(512,256),
/// t2-512 = mlp(4,64,128,512) fc(256), t2-256 = mlp(4,64,128,256) fc().
NetConfig net_preset(const std::string& name, int k);

struct ModelStats {
    std::int64_t trainable_params = 0;
    std::int64_t bn_buffers = 0; // running mean/var, reported separately
    std::int64_t flops = 0;      // one forward pass, single sample of n spheres
};

/// Closed-form accounting: linear = in*out+out params, rows*(2*in*out+out)
/// FLOPs; batch norm = 2*ch trainable + 2*ch buffers, 2 FLOPs per feature;
/// pool = n comparisons per channel. ReLU is not counted.
ModelStats model_stats(const NetConfig& cfg, int n);

/// Offsets of every tensor inside the flat parameter vector, in declaration
/// order: per layer W, b, then gamma, beta, running mean, running var.
struct TensorLayout {
    struct Layer {
        int in = 0, out = 0;
        std::int64_t w = -1, b = -1;
        std::int64_t gamma = -1, beta = -1, rmean = -1, rvar = -1;
    };
    std::vector<Layer> mlp, fc;
    Layer head;
    std::int64_t total = 0;
    std::vector<std::uint8_t> trainable; // running stats are buffers, not trained
};

TensorLayout make_layout(const NetConfig& cfg);

struct SphereNetModel {
    NetConfig config;
    std::uint64_t geometry_hash = 0; // dataset geometry this model was trained against
    TensorLayout layout;
    std::vector<double> params; // weights + biases + bn affine + bn running stats
    std::vector<double> adam_m, adam_v;
    std::int64_t adam_step = 0;
};

/// Glorot-uniform weights, zero biases, identity batch norm; all randomness
/// from streams derived off `seed`.
SphereNetModel init_model(const NetConfig& cfg, std::uint64_t seed,
                          std::uint64_t geometry_hash = 0);

/// Inference-mode logits for a B x n x 4 row-major batch.
std::vector<double> forward(SphereNetModel& model, const std::vector<float>& batch, int b,
                            int n);

struct EpochStats {
    int epoch;
    double lr;
    double train_loss;
    double train_acc;
    double test_acc;
};
using TrainLog = std::vector<EpochStats>;

/// Adam (lr 1e-3, halved-ish by x0.7 every 20 epochs), batch 32, softmax
/// cross entropy, shuffling/augmentation/dropout all seeded. Checkpoints
/// after every epoch when a path is given; on a non-finite loss restores the
/// last finished epoch, checkpoints it, and throws DivergedTraining.
TrainLog train(SphereNetModel& model, const DatasetManifest& manifest, int epochs,
               std::uint64_t seed, const std::string& checkpoint_path = "",
               int batch_size = 32,
               const std::function<void(const EpochStats&)>& on_epoch = {});

struct EvalResult {
    double overall = 0.0;
    std::vector<double> per_class_acc;
    std::vector<std::int64_t> per_class_count;
};

/// Deterministic inference over a split; n_eval > 0 truncates each sample to
/// its first n_eval spheres (prefix), 0 uses the manifest's n.
EvalResult evaluate(SphereNetModel& model, const DatasetManifest& manifest, Split split,
                    int n_eval = 0);

/// Central finite differences against analytic gradients on a random subset
/// (1% of trainable parameters, at least 32) with batch norm frozen to its
/// running statistics and dropout off. Returns the max relative error,
/// |a - d| / max(|a|, |d|, 1e-2).
double gradient_check(SphereNetModel& model, const SphereSample& sample, double epsilon,
                      std::uint64_t seed = 1);

/// Row indices that win the channel-wise max for at least one global-feature
/// channel; sorted, deduplicated.
std::vector<int> critical_spheres(SphereNetModel& model, const SphereSample& sample);

/// "INET" checkpoint: magic, u32 version, u64 geometry hash, config fields,
/// u64 parameter count, then the flat parameter vector as little-endian f32
/// in declaration order (running stats included).
void save_checkpoint(const SphereNetModel& model, const std::string& path);
SphereNetModel load_checkpoint(const std::string& path);

/// CSV columns: epoch, train_loss, train_acc, test_acc. LF endings.
void write_training_csv(const TrainLog& log, const std::string& path);

} // namespace insphere
