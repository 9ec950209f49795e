#include "insphere/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "insphere/binary_io.hpp"
#include "insphere/config.hpp"
#include "insphere/errors.hpp"

namespace insphere {

NetConfig net_preset(const std::string& name, int k) {
    NetConfig cfg;
    cfg.k = k;
    cfg.name = name;
    if (name == "t2-1024") {
        cfg.mlp_dims = {64, 128, 1024};
        cfg.fc_dims = {512, 256};
    } else if (name == "t2-512") {
        cfg.mlp_dims = {64, 128, 512};
        cfg.fc_dims = {256};
    } else if (name == "t2-256") {
        cfg.mlp_dims = {64, 128, 256};
        cfg.fc_dims = {};
    } else {
        throw UserError("unknown net preset: " + name + " (want t2-1024, t2-512 or t2-256)");
    }
    return cfg;
}

ModelStats model_stats(const NetConfig& cfg, int n) {
    if (n < 1) throw UserError("model_stats: sphere count must be >= 1");
    ModelStats s;
    auto linear = [&](int in, int out, std::int64_t rows) {
        s.trainable_params += static_cast<std::int64_t>(in) * out + out;
        s.flops += rows * (2ll * in * out + out);
    };
    auto bn = [&](int ch, std::int64_t rows) {
        if (!cfg.batch_norm) return;
        s.trainable_params += 2ll * ch;
        s.bn_buffers += 2ll * ch;
        s.flops += rows * 2ll * ch;
    };
    int in = cfg.input_dim;
    for (int d : cfg.mlp_dims) {
        linear(in, d, n);
        bn(d, n);
        in = d;
    }
    s.flops += static_cast<std::int64_t>(in) * n; // pool comparisons
    for (int d : cfg.fc_dims) {
        linear(in, d, 1);
        bn(d, 1);
        in = d;
    }
    linear(in, cfg.k, 1);
    return s;
}

TensorLayout make_layout(const NetConfig& cfg) {
    if (cfg.k < 2) throw UserError("net: class count must be >= 2");
    if (cfg.mlp_dims.empty()) throw UserError("net: need at least one mlp layer");
    if (cfg.input_dim < 1) throw UserError("net: bad input dim");
    TensorLayout L;
    std::int64_t off = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> buffers;
    auto add_layer = [&](int in, int out, bool bn) {
        TensorLayout::Layer l;
        l.in = in;
        l.out = out;
        l.w = off;
        off += static_cast<std::int64_t>(in) * out;
        l.b = off;
        off += out;
        if (bn) {
            l.gamma = off;
            off += out;
            l.beta = off;
            off += out;
            l.rmean = off;
            off += out;
            l.rvar = off;
            off += out;
            buffers.emplace_back(l.rmean, l.rvar + out);
        }
        return l;
    };
    int in = cfg.input_dim;
    for (int d : cfg.mlp_dims) {
        L.mlp.push_back(add_layer(in, d, cfg.batch_norm));
        in = d;
    }
    for (int d : cfg.fc_dims) {
        L.fc.push_back(add_layer(in, d, cfg.batch_norm));
        in = d;
    }
    L.head = add_layer(in, cfg.k, false);
    L.total = off;
    L.trainable.assign(static_cast<size_t>(off), 1);
    for (auto [b, e] : buffers)
        std::fill(L.trainable.begin() + b, L.trainable.begin() + e, std::uint8_t{0});
    return L;
}

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9; // fraction of the running stat retained

enum class Mode { Train, Frozen, Eval }; // Frozen: running stats, gradients still flow

struct LayerCache {
    int rows = 0;
    std::vector<double> x;       // linear input
    std::vector<double> xhat;    // normalized pre-affine (bn layers)
    std::vector<double> inv_std; // per channel, from the stats actually used
    std::vector<double> act;     // post-ReLU output, pre-dropout
};

struct Workspace {
    Mode mode = Mode::Eval;
    int B = 0, n = 0;
    std::vector<LayerCache> mlp, fc;
    std::vector<double> pooled;
    std::vector<int> argmax;       // winning row per (sample, channel)
    std::vector<double> drop_mask; // scale per element of the last fc act
    std::vector<double> head_in;
    std::vector<double> logits;
};

std::uint64_t stream_seed(std::uint64_t seed, const char* purpose, std::int64_t idx) {
    std::string key = std::string(purpose) + "|" + std::to_string(seed);
    if (idx >= 0) key += "|" + std::to_string(idx);
    return fnv1a64(key);
}

void linear_forward(const std::vector<double>& p, const TensorLayout::Layer& l,
                    const std::vector<double>& x, int rows, std::vector<double>& y) {
    y.assign(static_cast<size_t>(rows) * l.out, 0.0);
    const double* W = p.data() + l.w;
    const double* b = p.data() + l.b;
    for (int r = 0; r < rows; ++r) {
        const double* xr = x.data() + static_cast<size_t>(r) * l.in;
        double* yr = y.data() + static_cast<size_t>(r) * l.out;
        for (int o = 0; o < l.out; ++o) {
            const double* w = W + static_cast<size_t>(o) * l.in;
            double acc = b[o];
            for (int i = 0; i < l.in; ++i) acc += w[i] * xr[i];
            yr[o] = acc;
        }
    }
}

// y: linear output, normalized/affined in place, then ReLU into c.act.
void bn_relu_forward(std::vector<double>& p, const TensorLayout::Layer& l,
                     std::vector<double>& y, int rows, Mode mode, LayerCache& c) {
    const int ch = l.out;
    if (l.gamma >= 0) {
        const double* gamma = p.data() + l.gamma;
        const double* beta = p.data() + l.beta;
        double* rmean = p.data() + l.rmean;
        double* rvar = p.data() + l.rvar;
        c.xhat.assign(static_cast<size_t>(rows) * ch, 0.0);
        c.inv_std.assign(ch, 0.0);
        for (int cc = 0; cc < ch; ++cc) {
            double mean, var;
            if (mode == Mode::Train) {
                double sum = 0.0;
                for (int r = 0; r < rows; ++r) sum += y[static_cast<size_t>(r) * ch + cc];
                mean = sum / rows;
                double sq = 0.0;
                for (int r = 0; r < rows; ++r) {
                    double d = y[static_cast<size_t>(r) * ch + cc] - mean;
                    sq += d * d;
                }
                var = sq / rows; // biased
                rmean[cc] = kBnMomentum * rmean[cc] + (1.0 - kBnMomentum) * mean;
                rvar[cc] = kBnMomentum * rvar[cc] + (1.0 - kBnMomentum) * var;
            } else {
                mean = rmean[cc];
                var = rvar[cc];
            }
            double inv = 1.0 / std::sqrt(var + kBnEps);
            c.inv_std[cc] = inv;
            for (int r = 0; r < rows; ++r) {
                size_t e = static_cast<size_t>(r) * ch + cc;
                double xh = (y[e] - mean) * inv;
                c.xhat[e] = xh;
                y[e] = gamma[cc] * xh + beta[cc];
            }
        }
    }
    c.act.resize(y.size());
    for (size_t e = 0; e < y.size(); ++e) c.act[e] = y[e] > 0.0 ? y[e] : 0.0;
}

void forward_pass(SphereNetModel& m, const float* batch, int B, int n, Mode mode,
                  std::mt19937_64* drop_rng, Workspace& ws) {
    const NetConfig& cfg = m.config;
    ws.mode = mode;
    ws.B = B;
    ws.n = n;
    ws.mlp.assign(cfg.mlp_dims.size(), {});
    ws.fc.assign(cfg.fc_dims.size(), {});
    ws.drop_mask.clear();

    int rows = B * n;
    std::vector<double> cur(static_cast<size_t>(rows) * cfg.input_dim);
    for (size_t e = 0; e < cur.size(); ++e) cur[e] = batch[e];

    std::vector<double> y;
    for (size_t li = 0; li < ws.mlp.size(); ++li) {
        LayerCache& c = ws.mlp[li];
        c.rows = rows;
        c.x = std::move(cur);
        linear_forward(m.params, m.layout.mlp[li], c.x, rows, y);
        bn_relu_forward(m.params, m.layout.mlp[li], y, rows, mode, c);
        cur = c.act;
    }

    const int C = cfg.mlp_dims.back();
    ws.pooled.assign(static_cast<size_t>(B) * C, 0.0);
    ws.argmax.assign(static_cast<size_t>(B) * C, 0);
    const std::vector<double>& feat = ws.mlp.back().act;
    for (int b = 0; b < B; ++b)
        for (int cc = 0; cc < C; ++cc) {
            double best = feat[static_cast<size_t>(b) * n * C + cc];
            int arg = 0;
            for (int r = 1; r < n; ++r) {
                double v = feat[(static_cast<size_t>(b) * n + r) * C + cc];
                if (v > best) { // ties keep the lowest row
                    best = v;
                    arg = r;
                }
            }
            ws.pooled[static_cast<size_t>(b) * C + cc] = best;
            ws.argmax[static_cast<size_t>(b) * C + cc] = arg;
        }

    cur = ws.pooled;
    rows = B;
    for (size_t li = 0; li < ws.fc.size(); ++li) {
        LayerCache& c = ws.fc[li];
        c.rows = rows;
        c.x = std::move(cur);
        linear_forward(m.params, m.layout.fc[li], c.x, rows, y);
        bn_relu_forward(m.params, m.layout.fc[li], y, rows, mode, c);
        cur = c.act;
    }

    if (!ws.fc.empty() && mode == Mode::Train && cfg.dropout_keep < 1.0) {
        if (!drop_rng) throw ShapeMismatch("training forward needs a dropout stream");
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ws.drop_mask.assign(cur.size(), 0.0);
        for (size_t e = 0; e < cur.size(); ++e) {
            double scale = u(*drop_rng) < cfg.dropout_keep ? 1.0 / cfg.dropout_keep : 0.0;
            ws.drop_mask[e] = scale;
            cur[e] *= scale;
        }
    }
    ws.head_in = std::move(cur);
    linear_forward(m.params, m.layout.head, ws.head_in, B, ws.logits);
}

std::vector<double> linear_backward(const std::vector<double>& p, std::vector<double>& g,
                                    const TensorLayout::Layer& l, const std::vector<double>& x,
                                    int rows, const std::vector<double>& dy) {
    const double* W = p.data() + l.w;
    double* dW = g.data() + l.w;
    double* db = g.data() + l.b;
    std::vector<double> dx(static_cast<size_t>(rows) * l.in, 0.0);
    for (int r = 0; r < rows; ++r) {
        const double* xr = x.data() + static_cast<size_t>(r) * l.in;
        const double* dyr = dy.data() + static_cast<size_t>(r) * l.out;
        double* dxr = dx.data() + static_cast<size_t>(r) * l.in;
        for (int o = 0; o < l.out; ++o) {
            double d = dyr[o];
            if (d == 0.0) continue;
            db[o] += d;
            const double* w = W + static_cast<size_t>(o) * l.in;
            double* dwo = dW + static_cast<size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) {
                dwo[i] += d * xr[i];
                dxr[i] += d * w[i];
            }
        }
    }
    return dx;
}

// d enters as the gradient at the bn output and leaves as the gradient at
// the linear output.
void bn_backward(const std::vector<double>& p, std::vector<double>& g,
                 const TensorLayout::Layer& l, const LayerCache& c, int rows, Mode mode,
                 std::vector<double>& d) {
    if (l.gamma < 0) return;
    const int ch = l.out;
    const double* gamma = p.data() + l.gamma;
    double* dgamma = g.data() + l.gamma;
    double* dbeta = g.data() + l.beta;
    for (int cc = 0; cc < ch; ++cc) {
        double s1 = 0.0, s2 = 0.0;
        for (int r = 0; r < rows; ++r) {
            size_t e = static_cast<size_t>(r) * ch + cc;
            s1 += d[e];
            s2 += d[e] * c.xhat[e];
        }
        dgamma[cc] += s2;
        dbeta[cc] += s1;
        if (mode == Mode::Train) {
            double f = gamma[cc] * c.inv_std[cc] / rows;
            for (int r = 0; r < rows; ++r) {
                size_t e = static_cast<size_t>(r) * ch + cc;
                d[e] = f * (rows * d[e] - s1 - c.xhat[e] * s2);
            }
        } else {
            double f = gamma[cc] * c.inv_std[cc];
            for (int r = 0; r < rows; ++r) d[static_cast<size_t>(r) * ch + cc] *= f;
        }
    }
}

void relu_backward(const LayerCache& c, std::vector<double>& d) {
    for (size_t e = 0; e < d.size(); ++e)
        if (!(c.act[e] > 0.0)) d[e] = 0.0;
}

void backward_pass(SphereNetModel& m, Workspace& ws, const std::vector<double>& dlogits,
                   std::vector<double>& g) {
    std::vector<double> d = linear_backward(m.params, g, m.layout.head, ws.head_in, ws.B, dlogits);
    if (!ws.drop_mask.empty())
        for (size_t e = 0; e < d.size(); ++e) d[e] *= ws.drop_mask[e];

    for (size_t li = ws.fc.size(); li-- > 0;) {
        LayerCache& c = ws.fc[li];
        relu_backward(c, d);
        bn_backward(m.params, g, m.layout.fc[li], c, c.rows, ws.mode, d);
        d = linear_backward(m.params, g, m.layout.fc[li], c.x, c.rows, d);
    }

    const int C = m.config.mlp_dims.back();
    std::vector<double> drows(static_cast<size_t>(ws.B) * ws.n * C, 0.0);
    for (int b = 0; b < ws.B; ++b)
        for (int cc = 0; cc < C; ++cc) {
            size_t e = static_cast<size_t>(b) * C + cc;
            drows[(static_cast<size_t>(b) * ws.n + ws.argmax[e]) * C + cc] += d[e];
        }
    d = std::move(drows);

    for (size_t li = ws.mlp.size(); li-- > 0;) {
        LayerCache& c = ws.mlp[li];
        relu_backward(c, d);
        bn_backward(m.params, g, m.layout.mlp[li], c, c.rows, ws.mode, d);
        d = linear_backward(m.params, g, m.layout.mlp[li], c.x, c.rows, d);
    }
}

int argmax_row(const double* v, int k) {
    int arg = 0;
    for (int j = 1; j < k; ++j)
        if (v[j] > v[arg]) arg = j; // ties keep the lowest class
    return arg;
}

double softmax_loss(const std::vector<double>& logits, const std::vector<int>& labels, int B,
                    int k, std::vector<double>* dlogits, int* correct) {
    if (dlogits) dlogits->assign(static_cast<size_t>(B) * k, 0.0);
    if (correct) *correct = 0;
    double total = 0.0;
    std::vector<double> ex(k);
    for (int b = 0; b < B; ++b) {
        const double* row = logits.data() + static_cast<size_t>(b) * k;
        int y = labels[b];
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            ex[j] = std::exp(row[j] - mx);
            sum += ex[j];
        }
        total -= row[y] - mx - std::log(sum);
        if (dlogits)
            for (int j = 0; j < k; ++j)
                (*dlogits)[static_cast<size_t>(b) * k + j] =
                    (ex[j] / sum - (j == y ? 1.0 : 0.0)) / B;
        if (correct && argmax_row(row, k) == y) ++*correct;
    }
    return total / B;
}

void adam_update(SphereNetModel& m, const std::vector<double>& g, double lr) {
    ++m.adam_step;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(m.adam_step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(m.adam_step));
    for (std::int64_t i = 0; i < m.layout.total; ++i) {
        if (!m.layout.trainable[i]) continue;
        m.adam_m[i] = b1 * m.adam_m[i] + (1.0 - b1) * g[i];
        m.adam_v[i] = b2 * m.adam_v[i] + (1.0 - b2) * g[i] * g[i];
        m.params[i] -= lr * (m.adam_m[i] / c1) / (std::sqrt(m.adam_v[i] / c2) + eps);
    }
}

void pack_batch(const std::vector<SphereSample>& samples, int n, int input_dim,
                std::vector<float>& flat, std::vector<int>& labels) {
    const int B = static_cast<int>(samples.size());
    flat.resize(static_cast<size_t>(B) * n * input_dim);
    labels.resize(B);
    for (int b = 0; b < B; ++b) {
        if (samples[b].n != n || samples[b].features.size() != static_cast<size_t>(n) * input_dim)
            throw ShapeMismatch("sample feature shape does not match batch");
        std::copy(samples[b].features.begin(), samples[b].features.end(),
                  flat.begin() + static_cast<size_t>(b) * n * input_dim);
        labels[b] = samples[b].label;
    }
}

double loss_only(SphereNetModel& m, const std::vector<float>& flat, int n, int label,
                 Workspace& ws) {
    forward_pass(m, flat.data(), 1, n, Mode::Frozen, nullptr, ws);
    std::vector<int> labels{label};
    return softmax_loss(ws.logits, labels, 1, m.config.k, nullptr, nullptr);
}

} // namespace

SphereNetModel init_model(const NetConfig& cfg, std::uint64_t seed,
                          std::uint64_t geometry_hash) {
    SphereNetModel m;
    m.config = cfg;
    m.geometry_hash = geometry_hash;
    m.layout = make_layout(cfg);
    m.params.assign(static_cast<size_t>(m.layout.total), 0.0);
    m.adam_m.assign(m.params.size(), 0.0);
    m.adam_v.assign(m.params.size(), 0.0);
    std::mt19937_64 rng(stream_seed(seed, "init", -1));
    auto glorot = [&](const TensorLayout::Layer& l) {
        double limit = std::sqrt(6.0 / (l.in + l.out));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (std::int64_t e = 0; e < static_cast<std::int64_t>(l.in) * l.out; ++e)
            m.params[l.w + e] = u(rng);
        if (l.gamma >= 0)
            for (int c = 0; c < l.out; ++c) {
                m.params[l.gamma + c] = 1.0;
                m.params[l.rvar + c] = 1.0;
            }
    };
    for (const auto& l : m.layout.mlp) glorot(l);
    for (const auto& l : m.layout.fc) glorot(l);
    glorot(m.layout.head);
    return m;
}

std::vector<double> forward(SphereNetModel& model, const std::vector<float>& batch, int b,
                            int n) {
    if (b < 1 || n < 1) throw ShapeMismatch("forward: batch and sphere counts must be >= 1");
    if (batch.size() != static_cast<size_t>(b) * n * model.config.input_dim)
        throw ShapeMismatch("forward: batch has " + std::to_string(batch.size()) +
                            " values, expected " +
                            std::to_string(static_cast<size_t>(b) * n * model.config.input_dim));
    Workspace ws;
    forward_pass(model, batch.data(), b, n, Mode::Eval, nullptr, ws);
    return ws.logits;
}

TrainLog train(SphereNetModel& model, const DatasetManifest& manifest, int epochs,
               std::uint64_t seed, const std::string& checkpoint_path, int batch_size,
               const std::function<void(const EpochStats&)>& on_epoch) {
    if (epochs < 1) throw UserError("train: epochs must be >= 1");
    if (batch_size < 1) throw UserError("train: batch size must be >= 1");
    const int n_train = static_cast<int>(manifest.split_indices(Split::Train).size());
    if (n_train == 0) throw EmptyDataset("train split is empty");
    if (static_cast<int>(manifest.classes.size()) != model.config.k)
        throw ShapeMismatch("model expects " + std::to_string(model.config.k) +
                            " classes, manifest has " + std::to_string(manifest.classes.size()));
    const bool has_test = !manifest.split_indices(Split::Test).empty();
    const int n_rows = manifest.requested_n;

    TrainLog log;
    std::vector<double> last_good = model.params;
    Workspace ws;
    std::vector<double> grads(model.params.size());
    std::vector<float> flat;
    std::vector<int> labels;
    std::vector<double> dlogits;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double lr = 1e-3 * std::pow(0.7, epoch / 20);
        std::mt19937_64 shuffle_rng(stream_seed(seed, "shuffle", epoch));
        std::mt19937_64 aug_rng(stream_seed(seed, "augment", epoch));
        std::mt19937_64 drop_rng(stream_seed(seed, "dropout", epoch));
        std::vector<int> order(n_train);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (int start = 0; start < n_train; start += batch_size) {
            int stop = std::min(n_train, start + batch_size);
            std::vector<int> idx(order.begin() + start, order.begin() + stop);
            auto samples = load_batch(manifest, Split::Train, idx, n_rows, &aug_rng);
            pack_batch(samples, n_rows, model.config.input_dim, flat, labels);
            const int B = stop - start;

            forward_pass(model, flat.data(), B, n_rows, Mode::Train, &drop_rng, ws);
            int batch_correct = 0;
            double loss =
                softmax_loss(ws.logits, labels, B, model.config.k, &dlogits, &batch_correct);
            if (!std::isfinite(loss)) {
                model.params = last_good;
                if (!checkpoint_path.empty()) save_checkpoint(model, checkpoint_path);
                throw DivergedTraining("loss became non-finite in epoch " +
                                       std::to_string(epoch));
            }
            loss_sum += loss * B;
            correct += batch_correct;

            std::fill(grads.begin(), grads.end(), 0.0);
            backward_pass(model, ws, dlogits, grads);
            adam_update(model, grads, lr);
        }

        EpochStats st;
        st.epoch = epoch;
        st.lr = lr;
        st.train_loss = loss_sum / n_train;
        st.train_acc = static_cast<double>(correct) / n_train;
        st.test_acc = has_test ? evaluate(model, manifest, Split::Test).overall : 0.0;
        log.push_back(st);

        last_good = model.params;
        if (!checkpoint_path.empty()) save_checkpoint(model, checkpoint_path);
        if (on_epoch) on_epoch(st);
    }
    return log;
}

EvalResult evaluate(SphereNetModel& model, const DatasetManifest& manifest, Split split,
                    int n_eval) {
    const auto order = manifest.split_indices(split);
    if (order.empty())
        throw EmptyDataset(std::string("evaluate: ") + split_name(split) + " split is empty");
    if (static_cast<int>(manifest.classes.size()) != model.config.k)
        throw ShapeMismatch("model expects " + std::to_string(model.config.k) +
                            " classes, manifest has " + std::to_string(manifest.classes.size()));
    const int n_rows = n_eval > 0 ? n_eval : manifest.requested_n;
    const int k = model.config.k;

    EvalResult res;
    res.per_class_acc.assign(k, 0.0);
    res.per_class_count.assign(k, 0);
    std::vector<std::int64_t> per_correct(k, 0);

    Workspace ws;
    std::vector<float> flat;
    std::vector<int> labels;
    const int total = static_cast<int>(order.size());
    std::int64_t correct = 0;
    for (int start = 0; start < total; start += 32) {
        int stop = std::min(total, start + 32);
        std::vector<int> idx(stop - start);
        std::iota(idx.begin(), idx.end(), start);
        auto samples = load_batch(manifest, split, idx, n_rows, nullptr);
        pack_batch(samples, n_rows, model.config.input_dim, flat, labels);
        const int B = stop - start;
        forward_pass(model, flat.data(), B, n_rows, Mode::Eval, nullptr, ws);
        for (int b = 0; b < B; ++b) {
            int pred = argmax_row(ws.logits.data() + static_cast<size_t>(b) * k, k);
            ++res.per_class_count[labels[b]];
            if (pred == labels[b]) {
                ++per_correct[labels[b]];
                ++correct;
            }
        }
    }
    res.overall = static_cast<double>(correct) / total;
    for (int c = 0; c < k; ++c)
        res.per_class_acc[c] = res.per_class_count[c]
                                   ? static_cast<double>(per_correct[c]) / res.per_class_count[c]
                                   : 0.0;
    return res;
}

double gradient_check(SphereNetModel& model, const SphereSample& sample, double epsilon,
                      std::uint64_t seed) {
    if (epsilon <= 0.0) throw UserError("gradient_check: epsilon must be positive");
    Workspace ws;
    forward_pass(model, sample.features.data(), 1, sample.n, Mode::Frozen, nullptr, ws);
    std::vector<int> labels{sample.label};
    std::vector<double> dlogits;
    softmax_loss(ws.logits, labels, 1, model.config.k, &dlogits, nullptr);
    std::vector<double> g(model.params.size(), 0.0);
    backward_pass(model, ws, dlogits, g);

    std::vector<std::int64_t> idxs;
    for (std::int64_t i = 0; i < model.layout.total; ++i)
        if (model.layout.trainable[i]) idxs.push_back(i);
    std::mt19937_64 rng(stream_seed(seed, "gradcheck", -1));
    std::shuffle(idxs.begin(), idxs.end(), rng);
    size_t count = std::min(idxs.size(), std::max<size_t>(32, idxs.size() / 100));

    std::vector<float> flat(sample.features);
    double worst = 0.0;
    for (size_t t = 0; t < count; ++t) {
        std::int64_t i = idxs[t];
        double orig = model.params[i];
        model.params[i] = orig + epsilon;
        double lp = loss_only(model, flat, sample.n, sample.label, ws);
        model.params[i] = orig - epsilon;
        double lm = loss_only(model, flat, sample.n, sample.label, ws);
        model.params[i] = orig;
        double fd = (lp - lm) / (2.0 * epsilon);
        double rel = std::fabs(g[i] - fd) / std::max({std::fabs(g[i]), std::fabs(fd), 1e-2});
        worst = std::max(worst, rel);
    }
    return worst;
}

std::vector<int> critical_spheres(SphereNetModel& model, const SphereSample& sample) {
    Workspace ws;
    forward_pass(model, sample.features.data(), 1, sample.n, Mode::Eval, nullptr, ws);
    std::vector<int> idx(ws.argmax.begin(), ws.argmax.end());
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

void save_checkpoint(const SphereNetModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open for writing: " + path);
    write_magic(f, "INET");
    write_u32(f, 1);
    write_u64(f, model.geometry_hash);
    write_u16(f, static_cast<std::uint16_t>(model.config.name.size()));
    f.write(model.config.name.data(),
            static_cast<std::streamsize>(model.config.name.size()));
    write_u32(f, static_cast<std::uint32_t>(model.config.input_dim));
    write_u32(f, static_cast<std::uint32_t>(model.config.k));
    f.put(model.config.batch_norm ? 1 : 0);
    write_f32(f, static_cast<float>(model.config.dropout_keep));
    write_u32(f, static_cast<std::uint32_t>(model.config.mlp_dims.size()));
    for (int d : model.config.mlp_dims) write_u32(f, static_cast<std::uint32_t>(d));
    write_u32(f, static_cast<std::uint32_t>(model.config.fc_dims.size()));
    for (int d : model.config.fc_dims) write_u32(f, static_cast<std::uint32_t>(d));
    write_u64(f, static_cast<std::uint64_t>(model.layout.total));
    for (double v : model.params) write_f32(f, static_cast<float>(v));
    if (!f) throw UserError("write failed: " + path);
}

SphereNetModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open: " + path);
    expect_magic(f, "INET", path);
    if (read_u32(f, path) != 1) throw CacheCorrupt("unsupported checkpoint version: " + path);
    SphereNetModel m;
    m.geometry_hash = read_u64(f, path);
    std::uint16_t name_len = read_u16(f, path);
    m.config.name.resize(name_len);
    f.read(m.config.name.data(), name_len);
    if (f.gcount() != name_len) throw CacheCorrupt("truncated " + path);
    m.config.input_dim = static_cast<int>(read_u32(f, path));
    m.config.k = static_cast<int>(read_u32(f, path));
    int bn = f.get();
    if (bn < 0) throw CacheCorrupt("truncated " + path);
    m.config.batch_norm = bn != 0;
    m.config.dropout_keep = read_f32(f, path);
    std::uint32_t nm = read_u32(f, path);
    if (nm > 64) throw CacheCorrupt("checkpoint layer count out of range: " + path);
    for (std::uint32_t i = 0; i < nm; ++i)
        m.config.mlp_dims.push_back(static_cast<int>(read_u32(f, path)));
    std::uint32_t nf = read_u32(f, path);
    if (nf > 64) throw CacheCorrupt("checkpoint layer count out of range: " + path);
    for (std::uint32_t i = 0; i < nf; ++i)
        m.config.fc_dims.push_back(static_cast<int>(read_u32(f, path)));
    std::uint64_t total = read_u64(f, path);
    m.layout = make_layout(m.config);
    if (total != static_cast<std::uint64_t>(m.layout.total))
        throw CacheCorrupt("checkpoint parameter count does not match its architecture: " +
                           path);
    m.params.resize(static_cast<size_t>(total));
    for (size_t i = 0; i < m.params.size(); ++i) m.params[i] = read_f32(f, path);
    if (f.peek() != std::char_traits<char>::eof())
        throw CacheCorrupt("checkpoint has trailing bytes: " + path);
    m.adam_m.assign(m.params.size(), 0.0);
    m.adam_v.assign(m.params.size(), 0.0);
    return m;
}

void write_training_csv(const TrainLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::binary); // binary: LF endings everywhere
    if (!f) throw UserError("cannot open for writing: " + path);
    f << "epoch,train_loss,train_acc,test_acc\n";
    char buf[160];
    for (const EpochStats& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss,
                      e.train_acc, e.test_acc);
        f << buf;
    }
    if (!f) throw UserError("write failed: " + path);
}

} // namespace insphere
