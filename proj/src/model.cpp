#include "svgforge/model.hpp"
#include "svgforge/error.hpp"
#include "svgforge/io.hpp"
#include "svgforge/log.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

namespace svgforge {

void ModelConfig::validate() const
{
    auto bad = [](std::string msg) { return Error(ErrorCode::InvalidConfig, std::move(msg)); };
    if (vocab_size < 4)
        throw bad(fmt::format("vocab_size {} too small", vocab_size));
    if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0)
        throw bad(fmt::format("embed_dim {} not divisible by heads {}", embed_dim, heads));
    if (layers == 0)
        throw bad("layers must be positive");
    if (context_length < 3)
        throw bad(fmt::format("context_length {} < 3", context_length));
    if (context_length < 3 + kGroupSize * max_components)
        throw bad(fmt::format("context_length {} cannot hold {} components", context_length, max_components));
    if (dropout != 0.0)
        throw bad("dropout is not supported; use 0");
}

std::size_t context_for(std::size_t max_components)
{
    const std::size_t needed = 3 + kGroupSize * max_components;
    return (needed + 15) / 16 * 16;
}

namespace {

// Per-layer tensor offsets relative to layer_base(l).
enum LayerSlot : std::size_t {
    kLn1G, kLn1B, kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo, kLn2G, kLn2B, kW1, kB1, kW2, kB2, kLayerTensors
};

constexpr std::size_t kTokEmb = 0;
constexpr std::size_t kPosEmb = 1;
constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

std::size_t layer_base(std::size_t l) { return 2 + l * kLayerTensors; }
std::size_t lnf_g(const ModelConfig& c) { return 2 + c.layers * kLayerTensors; }
std::size_t lnf_b(const ModelConfig& c) { return lnf_g(c) + 1; }
std::size_t head_idx(const ModelConfig& c) { return lnf_g(c) + 2; }

enum class Init { Normal, Zero, One };

struct TensorSpec {
    std::string name;
    std::vector<std::size_t> shape;
    Init init;
    bool decay;
};

std::vector<TensorSpec> tensor_specs(const ModelConfig& c)
{
    const std::size_t d = c.embed_dim;
    const std::size_t V = c.vocab_size;
    std::vector<TensorSpec> s;
    s.push_back({"tok_emb", {V, d}, Init::Normal, true});
    s.push_back({"pos_emb", {c.context_length, d}, Init::Normal, true});
    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::string p = fmt::format("h{}.", l);
        s.push_back({p + "ln1.g", {d}, Init::One, false});
        s.push_back({p + "ln1.b", {d}, Init::Zero, false});
        for (const char* w : {"wq", "wk", "wv", "wo"}) {
            s.push_back({p + "attn." + w, {d, d}, Init::Normal, true});
            s.push_back({p + "attn.b" + std::string(w + 1), {d}, Init::Zero, false});
        }
        s.push_back({p + "ln2.g", {d}, Init::One, false});
        s.push_back({p + "ln2.b", {d}, Init::Zero, false});
        s.push_back({p + "mlp.w1", {d, 4 * d}, Init::Normal, true});
        s.push_back({p + "mlp.b1", {4 * d}, Init::Zero, false});
        s.push_back({p + "mlp.w2", {4 * d, d}, Init::Normal, true});
        s.push_back({p + "mlp.b2", {d}, Init::Zero, false});
    }
    s.push_back({"lnf.g", {d}, Init::One, false});
    s.push_back({"lnf.b", {d}, Init::Zero, false});
    s.push_back({"head", {d, V}, Init::Normal, true});
    return s;
}

Parameters shaped(const ModelConfig& config)
{
    Parameters p;
    p.config = config;
    for (auto& spec : tensor_specs(config)) {
        Tensor t;
        t.name = spec.name;
        t.shape = spec.shape;
        t.decay = spec.decay;
        const std::size_t n =
            std::accumulate(spec.shape.begin(), spec.shape.end(), std::size_t{1}, std::multiplies<>());
        t.data.assign(n, spec.init == Init::One ? 1.0 : 0.0);
        p.tensors.push_back(std::move(t));
    }
    return p;
}

// ------------------------------------------------------------------ kernels

// Y[n,out] = X[n,in] * W[in,out] + b
// C[m x n] += A[m x kd] * B[kd x n]. Every element accumulates over k in ascending order, so a
// row's result does not depend on where it sits in the batch.
void gemm_acc(const double* __restrict A, std::size_t m, std::size_t kd, const double* __restrict B, std::size_t n,
              double* __restrict C)
{
    constexpr std::size_t R = 4, K = 4;
    std::size_t i = 0;
    for (; i + R <= m; i += R) {
        std::size_t j = 0;
        for (; j + K <= n; j += K) {
            double acc[R][K];
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t c = 0; c < K; ++c)
                    acc[r][c] = C[(i + r) * n + j + c];
            for (std::size_t k = 0; k < kd; ++k) {
                const double* b = B + k * n + j;
                for (std::size_t r = 0; r < R; ++r) {
                    const double a = A[(i + r) * kd + k];
                    for (std::size_t c = 0; c < K; ++c)
                        acc[r][c] += a * b[c];
                }
            }
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t c = 0; c < K; ++c)
                    C[(i + r) * n + j + c] = acc[r][c];
        }
        for (; j < n; ++j) {
            for (std::size_t r = 0; r < R; ++r) {
                double acc = C[(i + r) * n + j];
                for (std::size_t k = 0; k < kd; ++k)
                    acc += A[(i + r) * kd + k] * B[k * n + j];
                C[(i + r) * n + j] = acc;
            }
        }
    }
    for (; i < m; ++i) {
        double* c = C + i * n;
        for (std::size_t k = 0; k < kd; ++k) {
            const double a = A[i * kd + k];
            const double* b = B + k * n;
            for (std::size_t j = 0; j < n; ++j)
                c[j] += a * b[j];
        }
    }
}

std::vector<double> transposed(const double* M, std::size_t rows, std::size_t cols)
{
    std::vector<double> t(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            t[c * rows + r] = M[r * cols + c];
    return t;
}

void linear(const double* X, std::size_t n, std::size_t in, const double* W, const double* b, std::size_t out,
            double* Y)
{
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out; ++o)
            Y[i * out + o] = b ? b[o] : 0.0;
    gemm_acc(X, n, in, W, out, Y);
}

// dX += dY W^T, dW += X^T dY, db += colsum(dY)
void linear_backward(const double* X, const double* dY, std::size_t n, std::size_t in, const double* W,
                     std::size_t out, double* dX, double* dW, double* db)
{
    if (db) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < out; ++o)
                db[o] += dY[i * out + o];
    }
    const std::vector<double> xt = transposed(X, n, in);
    gemm_acc(xt.data(), in, n, dY, out, dW);
    if (dX) {
        const std::vector<double> wt = transposed(W, in, out);
        gemm_acc(dY, n, out, wt.data(), in, dX);
    }
}

void layernorm(const double* X, std::size_t n, std::size_t d, const double* g, const double* b, double* Y,
               double* mean_out, double* rstd_out)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = X + i * d;
        double mean = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            mean += x[k];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            var += (x[k] - mean) * (x[k] - mean);
        var /= static_cast<double>(d);
        const double rstd = 1.0 / std::sqrt(var + kLnEps);
        double* y = Y + i * d;
        for (std::size_t k = 0; k < d; ++k)
            y[k] = (x[k] - mean) * rstd * g[k] + b[k];
        if (mean_out) {
            mean_out[i] = mean;
            rstd_out[i] = rstd;
        }
    }
}

void layernorm_backward(const double* X, const double* dY, std::size_t n, std::size_t d, const double* g,
                        const double* mean, const double* rstd, double* dX, double* dg, double* db)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = X + i * d;
        const double* dy = dY + i * d;
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double xhat = (x[k] - mean[i]) * rstd[i];
            const double dxhat = dy[k] * g[k];
            dg[k] += dy[k] * xhat;
            db[k] += dy[k];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
        }
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t k = 0; k < d; ++k) {
            const double xhat = (x[k] - mean[i]) * rstd[i];
            const double dxhat = dy[k] * g[k];
            dX[i * d + k] += rstd[i] * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
        }
    }
}

constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)

double gelu(double x)
{
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x)
{
    const double u = kGeluC * (x + 0.044715 * x * x * x);
    const double th = std::tanh(u);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

struct LayerCache {
    std::vector<double> x, ln1, mean1, rstd1, q, k, v, probs, att, x2, ln2, mean2, rstd2, hpre, hact;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::vector<double> xf, lnf, meanf, rstdf;
};

void check_tokens(const Parameters& params, const TokenBatch& tokens)
{
    if (tokens.ids.size() != tokens.batch * tokens.length)
        throw Error(ErrorCode::InvalidArgument, "token batch shape mismatch");
    if (tokens.length > params.config.context_length)
        throw Error(ErrorCode::SequenceTooLong,
                    fmt::format("length {} exceeds context {}", tokens.length, params.config.context_length));
    for (TokenId id : tokens.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= params.config.vocab_size)
            throw Error(ErrorCode::TokenOutOfRange, fmt::format("token {} outside vocabulary", id));
    }
}

// Runs the network and fills `cache` (when given) with everything backward needs.
std::vector<double> run_forward(const Parameters& params, const TokenBatch& tokens, ForwardCache* cache)
{
    check_tokens(params, tokens);
    const ModelConfig& c = params.config;
    const std::size_t B = tokens.batch, T = tokens.length, d = c.embed_dim, H = c.heads, hd = d / H;
    const std::size_t N = B * T, V = c.vocab_size;
    const auto& P = params.tensors;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<double> x(N * d);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const double* te = P[kTokEmb].data.data() + static_cast<std::size_t>(tokens.ids[b * T + t]) * d;
            const double* pe = P[kPosEmb].data.data() + t * d;
            double* xr = x.data() + (b * T + t) * d;
            for (std::size_t k = 0; k < d; ++k)
                xr[k] = te[k] + pe[k];
        }
    }

    if (cache)
        cache->layers.assign(c.layers, {});
    std::vector<double> ln(N * d), mean(N), rstd(N), q(N * d), k(N * d), v(N * d), att(N * d), proj(N * d);
    std::vector<double> hpre(N * 4 * d), hact(N * 4 * d), probs(B * H * T * T);
    std::vector<double> row(T);

    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::size_t base = layer_base(l);
        LayerCache* lc = cache ? &cache->layers[l] : nullptr;
        if (lc)
            lc->x = x;

        layernorm(x.data(), N, d, P[base + kLn1G].data.data(), P[base + kLn1B].data.data(), ln.data(), mean.data(),
                  rstd.data());
        linear(ln.data(), N, d, P[base + kWq].data.data(), P[base + kBq].data.data(), d, q.data());
        linear(ln.data(), N, d, P[base + kWk].data.data(), P[base + kBk].data.data(), d, k.data());
        linear(ln.data(), N, d, P[base + kWv].data.data(), P[base + kBv].data.data(), d, v.data());

        std::fill(att.begin(), att.end(), 0.0);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t t = 0; t < T; ++t) {
                    const double* qt = q.data() + (b * T + t) * d + h * hd;
                    double mx = -std::numeric_limits<double>::infinity();
                    for (std::size_t s = 0; s <= t; ++s) {
                        const double* ks = k.data() + (b * T + s) * d + h * hd;
                        double dot = 0.0;
                        for (std::size_t j = 0; j < hd; ++j)
                            dot += qt[j] * ks[j];
                        row[s] = dot * scale;
                        mx = std::max(mx, row[s]);
                    }
                    double sum = 0.0;
                    for (std::size_t s = 0; s <= t; ++s) {
                        row[s] = std::exp(row[s] - mx);
                        sum += row[s];
                    }
                    double* pr = probs.data() + ((b * H + h) * T + t) * T;
                    double* out = att.data() + (b * T + t) * d + h * hd;
                    for (std::size_t s = 0; s <= t; ++s) {
                        pr[s] = row[s] / sum;
                        const double* vs = v.data() + (b * T + s) * d + h * hd;
                        for (std::size_t j = 0; j < hd; ++j)
                            out[j] += pr[s] * vs[j];
                    }
                }
            }
        }
        linear(att.data(), N, d, P[base + kWo].data.data(), P[base + kBo].data.data(), d, proj.data());
        for (std::size_t i = 0; i < N * d; ++i)
            x[i] += proj[i];
        if (lc) {
            lc->ln1 = ln;
            lc->mean1 = mean;
            lc->rstd1 = rstd;
            lc->q = q;
            lc->k = k;
            lc->v = v;
            lc->probs = probs;
            lc->att = att;
            lc->x2 = x;
        }

        layernorm(x.data(), N, d, P[base + kLn2G].data.data(), P[base + kLn2B].data.data(), ln.data(), mean.data(),
                  rstd.data());
        linear(ln.data(), N, d, P[base + kW1].data.data(), P[base + kB1].data.data(), 4 * d, hpre.data());
        for (std::size_t i = 0; i < hpre.size(); ++i)
            hact[i] = gelu(hpre[i]);
        linear(hact.data(), N, 4 * d, P[base + kW2].data.data(), P[base + kB2].data.data(), d, proj.data());
        for (std::size_t i = 0; i < N * d; ++i)
            x[i] += proj[i];
        if (lc) {
            lc->ln2 = ln;
            lc->mean2 = mean;
            lc->rstd2 = rstd;
            lc->hpre = hpre;
            lc->hact = hact;
        }
    }

    layernorm(x.data(), N, d, P[lnf_g(c)].data.data(), P[lnf_b(c)].data.data(), ln.data(), mean.data(), rstd.data());
    std::vector<double> logits(N * V);
    linear(ln.data(), N, d, P[head_idx(c)].data.data(), nullptr, V, logits.data());
    if (cache) {
        cache->xf = std::move(x);
        cache->lnf = std::move(ln);
        cache->meanf = std::move(mean);
        cache->rstdf = std::move(rstd);
    }
    return logits;
}

void log_softmax_row(std::span<const double> logits, std::vector<double>& out)
{
    out.resize(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits)
        sum += std::exp(z - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t i = 0; i < logits.size(); ++i)
        out[i] = logits[i] - lse;
}

} // namespace

std::size_t Parameters::count() const
{
    std::size_t n = 0;
    for (const auto& t : tensors)
        n += t.size();
    return n;
}

bool Parameters::all_finite() const
{
    for (const auto& t : tensors) {
        for (double v : t.data) {
            if (!std::isfinite(v))
                return false;
        }
    }
    return true;
}

Parameters Parameters::zeros_like() const
{
    Parameters z;
    z.config = config;
    z.tensors = tensors;
    for (auto& t : z.tensors)
        std::fill(t.data.begin(), t.data.end(), 0.0);
    return z;
}

std::size_t parameter_count(const ModelConfig& c)
{
    const std::size_t d = c.embed_dim;
    const std::size_t per_layer = 2 * d                // ln1
                                  + 4 * (d * d + d)    // q, k, v, o
                                  + 2 * d              // ln2
                                  + (d * 4 * d + 4 * d) // mlp up
                                  + (4 * d * d + d);   // mlp down
    return c.vocab_size * d + c.context_length * d + c.layers * per_layer + 2 * d + d * c.vocab_size;
}

Parameters init_params(const ModelConfig& config)
{
    config.validate();
    Parameters p = shaped(config);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, kInitStd);
    const auto specs = tensor_specs(config);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].init != Init::Normal)
            continue;
        for (double& v : p.tensors[i].data)
            v = normal(rng);
    }
    return p;
}

Logits forward(const Parameters& params, const TokenBatch& tokens)
{
    Logits out;
    out.batch = tokens.batch;
    out.length = tokens.length;
    out.vocab = params.config.vocab_size;
    out.data = run_forward(params, tokens, nullptr);
    return out;
}

double nll_loss(const Logits& logits, std::span<const TokenId> targets, std::span<const double> mask)
{
    const std::size_t N = logits.batch * logits.length;
    if (targets.size() != N || mask.size() != N)
        throw Error(ErrorCode::InvalidArgument, "loss shapes do not match logits");
    double total = 0.0;
    double count = 0.0;
    std::vector<double> lsm;
    for (std::size_t i = 0; i < N; ++i) {
        if (mask[i] == 0.0)
            continue;
        log_softmax_row(std::span<const double>(logits.data).subspan(i * logits.vocab, logits.vocab), lsm);
        total -= mask[i] * lsm[static_cast<std::size_t>(targets[i])];
        count += mask[i];
    }
    if (count == 0.0)
        throw Error(ErrorCode::EmptyMask, "no masked positions");
    return total / count;
}

TrainingBatch TrainingBatch::from_sequences(std::span<const TokenSequence> sequences)
{
    TrainingBatch tb;
    std::size_t len = 1;
    for (const auto& s : sequences) {
        if (s.empty() || s.front() != kBos)
            throw Error(ErrorCode::InvalidArgument, "training rows must start with BOS");
        len = std::max(len, s.size() - 1);
    }
    tb.inputs.batch = sequences.size();
    tb.inputs.length = len;
    tb.inputs.ids.assign(sequences.size() * len, kPad);
    tb.targets.assign(sequences.size() * len, kPad);
    tb.mask.assign(sequences.size() * len, 0.0);
    for (std::size_t b = 0; b < sequences.size(); ++b) {
        const auto& s = sequences[b];
        tb.inputs.ids[b * len] = s[0];
        for (std::size_t t = 0; t + 1 < s.size(); ++t) {
            tb.inputs.ids[b * len + t] = s[t];
            tb.targets[b * len + t] = s[t + 1];
            tb.mask[b * len + t] = 1.0;
        }
    }
    return tb;
}

LossAndGradients backward(const Parameters& params, const TrainingBatch& batch)
{
    const ModelConfig& c = params.config;
    const TokenBatch& tokens = batch.inputs;
    const std::size_t B = tokens.batch, T = tokens.length, d = c.embed_dim, H = c.heads, hd = d / H;
    const std::size_t N = B * T, V = c.vocab_size;
    const auto& P = params.tensors;

    LossAndGradients out;
    out.grads = params.zeros_like();
    auto& G = out.grads.tensors;

    const double count = std::accumulate(batch.mask.begin(), batch.mask.end(), 0.0);
    if (count == 0.0) {
        check_tokens(params, tokens);
        return out;
    }

    ForwardCache cache;
    const std::vector<double> logits = run_forward(params, tokens, &cache);

    // dL/dlogits = mask * (softmax - onehot) / count
    std::vector<double> dlogits(N * V, 0.0);
    std::vector<double> lsm;
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (batch.mask[i] == 0.0)
            continue;
        log_softmax_row(std::span<const double>(logits).subspan(i * V, V), lsm);
        const auto target = static_cast<std::size_t>(batch.targets[i]);
        total -= batch.mask[i] * lsm[target];
        const double w = batch.mask[i] / count;
        for (std::size_t j = 0; j < V; ++j)
            dlogits[i * V + j] = w * std::exp(lsm[j]);
        dlogits[i * V + target] -= w;
    }
    out.loss = total / count;

    std::vector<double> dln(N * d, 0.0);
    linear_backward(cache.lnf.data(), dlogits.data(), N, d, P[head_idx(c)].data.data(), V, dln.data(),
                    G[head_idx(c)].data.data(), nullptr);
    std::vector<double> dx(N * d, 0.0);
    layernorm_backward(cache.xf.data(), dln.data(), N, d, P[lnf_g(c)].data.data(), cache.meanf.data(),
                       cache.rstdf.data(), dx.data(), G[lnf_g(c)].data.data(), G[lnf_b(c)].data.data());

    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<double> dh(N * 4 * d), datt(N * d), dq(N * d), dk(N * d), dv(N * d), dprob(T);

    for (std::size_t l = c.layers; l-- > 0;) {
        const std::size_t base = layer_base(l);
        const LayerCache& lc = cache.layers[l];

        // MLP block: x_out = x2 + W2 gelu(W1 ln2(x2))
        std::fill(dh.begin(), dh.end(), 0.0);
        linear_backward(lc.hact.data(), dx.data(), N, 4 * d, P[base + kW2].data.data(), d, dh.data(),
                        G[base + kW2].data.data(), G[base + kB2].data.data());
        for (std::size_t i = 0; i < dh.size(); ++i)
            dh[i] *= gelu_grad(lc.hpre[i]);
        std::fill(dln.begin(), dln.end(), 0.0);
        linear_backward(lc.ln2.data(), dh.data(), N, d, P[base + kW1].data.data(), 4 * d, dln.data(),
                        G[base + kW1].data.data(), G[base + kB1].data.data());
        layernorm_backward(lc.x2.data(), dln.data(), N, d, P[base + kLn2G].data.data(), lc.mean2.data(),
                           lc.rstd2.data(), dx.data(), G[base + kLn2G].data.data(), G[base + kLn2B].data.data());

        // Attention block: x2 = x + Wo attn(ln1(x))
        std::fill(datt.begin(), datt.end(), 0.0);
        linear_backward(lc.att.data(), dx.data(), N, d, P[base + kWo].data.data(), d, datt.data(),
                        G[base + kWo].data.data(), G[base + kBo].data.data());
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t t = 0; t < T; ++t) {
                    const double* pr = lc.probs.data() + ((b * H + h) * T + t) * T;
                    const double* dout = datt.data() + (b * T + t) * d + h * hd;
                    double weighted = 0.0;
                    for (std::size_t s = 0; s <= t; ++s) {
                        const double* vs = lc.v.data() + (b * T + s) * d + h * hd;
                        double* dvs = dv.data() + (b * T + s) * d + h * hd;
                        double dp = 0.0;
                        for (std::size_t j = 0; j < hd; ++j) {
                            dp += dout[j] * vs[j];
                            dvs[j] += pr[s] * dout[j];
                        }
                        dprob[s] = dp;
                        weighted += pr[s] * dp;
                    }
                    const double* qt = lc.q.data() + (b * T + t) * d + h * hd;
                    double* dqt = dq.data() + (b * T + t) * d + h * hd;
                    for (std::size_t s = 0; s <= t; ++s) {
                        const double dscore = pr[s] * (dprob[s] - weighted) * scale;
                        const double* ks = lc.k.data() + (b * T + s) * d + h * hd;
                        double* dks = dk.data() + (b * T + s) * d + h * hd;
                        for (std::size_t j = 0; j < hd; ++j) {
                            dqt[j] += dscore * ks[j];
                            dks[j] += dscore * qt[j];
                        }
                    }
                }
            }
        }
        std::fill(dln.begin(), dln.end(), 0.0);
        linear_backward(lc.ln1.data(), dq.data(), N, d, P[base + kWq].data.data(), d, dln.data(),
                        G[base + kWq].data.data(), G[base + kBq].data.data());
        linear_backward(lc.ln1.data(), dk.data(), N, d, P[base + kWk].data.data(), d, dln.data(),
                        G[base + kWk].data.data(), G[base + kBk].data.data());
        linear_backward(lc.ln1.data(), dv.data(), N, d, P[base + kWv].data.data(), d, dln.data(),
                        G[base + kWv].data.data(), G[base + kBv].data.data());
        layernorm_backward(lc.x.data(), dln.data(), N, d, P[base + kLn1G].data.data(), lc.mean1.data(),
                           lc.rstd1.data(), dx.data(), G[base + kLn1G].data.data(), G[base + kLn1B].data.data());
    }

    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const double* g = dx.data() + (b * T + t) * d;
            double* te = G[kTokEmb].data.data() + static_cast<std::size_t>(tokens.ids[b * T + t]) * d;
            double* pe = G[kPosEmb].data.data() + t * d;
            for (std::size_t k = 0; k < d; ++k) {
                te[k] += g[k];
                pe[k] += g[k];
            }
        }
    }
    return out;
}

OptimState OptimState::for_params(const std::vector<Tensor>& params, AdamWConfig hyper)
{
    OptimState s;
    s.hyper = hyper;
    for (const auto& t : params) {
        s.m.emplace_back(t.size(), 0.0);
        s.v.emplace_back(t.size(), 0.0);
    }
    return s;
}

void adamw_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimState& state)
{
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw Error(ErrorCode::InvalidArgument, "optimizer shapes do not match parameters");
    const AdamWConfig& h = state.hyper;
    ++state.step;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].data;
        const auto& g = grads[i].data;
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (g.size() != p.size() || m.size() != p.size())
            throw Error(ErrorCode::InvalidArgument, fmt::format("shape mismatch for tensor {}", params[i].name));
        const double decay = params[i].decay ? 1.0 - h.lr * h.weight_decay : 1.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] = p[j] * decay - h.lr * mhat / (std::sqrt(vhat) + h.eps);
        }
    }
}

TrainResult train(std::span<const TokenSequence> corpus, const ModelConfig& config, const TrainConfig& tc,
                  const EpochCallback& on_epoch)
{
    if (tc.batch_size == 0)
        throw Error(ErrorCode::InvalidConfig, "batch size must be positive");
    TrainResult result;
    result.params = init_params(config);

    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].size() > config.context_length) {
            const std::string msg = fmt::format("sequence {} has {} tokens, context is {}", i, corpus[i].size(),
                                                config.context_length);
            if (tc.strict)
                throw Error(ErrorCode::SequenceTooLong, msg);
            log::warn("{}; skipped", msg);
            ++result.skipped;
            continue;
        }
        if (corpus[i].size() < 2 || corpus[i].front() != kBos)
            throw Error(ErrorCode::InvalidArgument, fmt::format("sequence {} must start with BOS and have a target", i));
        usable.push_back(i);
    }

    OptimState state = OptimState::for_params(result.params.tensors, tc.optim);
    std::mt19937_64 rng(tc.seed);
    std::size_t step = 0;
    bool stop = false;
    for (std::size_t epoch = 0; epoch < tc.epochs && !stop && !usable.empty(); ++epoch) {
        std::vector<std::size_t> order = usable;
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            if (tc.max_steps && step >= *tc.max_steps) {
                stop = true;
                break;
            }
            std::vector<TokenSequence> rows;
            for (std::size_t i = start; i < std::min(order.size(), start + tc.batch_size); ++i)
                rows.push_back(corpus[order[i]]);
            const TrainingBatch batch = TrainingBatch::from_sequences(rows);
            LossAndGradients lg = backward(result.params, batch);
            adamw_step(result.params.tensors, lg.grads.tensors, state);
            if (!std::isfinite(lg.loss) || !result.params.all_finite())
                throw Error(ErrorCode::InvalidConfig, fmt::format("non-finite loss or parameters at step {}", step));
            result.steps.push_back({epoch, step, lg.loss});
            epoch_total += lg.loss;
            ++epoch_batches;
            ++step;
        }
        if (epoch_batches > 0)
            result.epoch_mean_loss.push_back(epoch_total / static_cast<double>(epoch_batches));
        if (on_epoch)
            on_epoch(result.params, epoch);
    }
    return result;
}

std::string loss_csv(std::span<const LossRecord> records)
{
    std::string out = "epoch,step,loss\n";
    for (const auto& r : records)
        out += fmt::format("{},{},{:.17g}\n", r.epoch, r.step, r.loss);
    return out;
}

IncrementalDecoder::IncrementalDecoder(const Parameters& params) : params_(params)
{
    const auto& c = params.config;
    keys_.assign(c.layers, std::vector<double>(c.context_length * c.embed_dim, 0.0));
    values_.assign(c.layers, std::vector<double>(c.context_length * c.embed_dim, 0.0));
}

std::span<const double> IncrementalDecoder::push(TokenId token)
{
    const ModelConfig& c = params_.config;
    if (pos_ >= c.context_length)
        throw Error(ErrorCode::SequenceTooLong, fmt::format("context of {} exhausted", c.context_length));
    if (token < 0 || static_cast<std::size_t>(token) >= c.vocab_size)
        throw Error(ErrorCode::TokenOutOfRange, fmt::format("token {} outside vocabulary", token));
    const std::size_t d = c.embed_dim, H = c.heads, hd = d / H, V = c.vocab_size;
    const auto& P = params_.tensors;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<double> x(d), ln(d), q(d), att(d), proj(d), hpre(4 * d), row(pos_ + 1);
    for (std::size_t k = 0; k < d; ++k)
        x[k] = P[kTokEmb].data[static_cast<std::size_t>(token) * d + k] + P[kPosEmb].data[pos_ * d + k];

    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::size_t base = layer_base(l);
        layernorm(x.data(), 1, d, P[base + kLn1G].data.data(), P[base + kLn1B].data.data(), ln.data(), nullptr,
                  nullptr);
        double* kc = keys_[l].data() + pos_ * d;
        double* vc = values_[l].data() + pos_ * d;
        linear(ln.data(), 1, d, P[base + kWq].data.data(), P[base + kBq].data.data(), d, q.data());
        linear(ln.data(), 1, d, P[base + kWk].data.data(), P[base + kBk].data.data(), d, kc);
        linear(ln.data(), 1, d, P[base + kWv].data.data(), P[base + kBv].data.data(), d, vc);
        std::fill(att.begin(), att.end(), 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s <= pos_; ++s) {
                const double* ks = keys_[l].data() + s * d + h * hd;
                double dot = 0.0;
                for (std::size_t j = 0; j < hd; ++j)
                    dot += q[h * hd + j] * ks[j];
                row[s] = dot * scale;
                mx = std::max(mx, row[s]);
            }
            double sum = 0.0;
            for (std::size_t s = 0; s <= pos_; ++s) {
                row[s] = std::exp(row[s] - mx);
                sum += row[s];
            }
            for (std::size_t s = 0; s <= pos_; ++s) {
                const double p = row[s] / sum;
                const double* vs = values_[l].data() + s * d + h * hd;
                for (std::size_t j = 0; j < hd; ++j)
                    att[h * hd + j] += p * vs[j];
            }
        }
        linear(att.data(), 1, d, P[base + kWo].data.data(), P[base + kBo].data.data(), d, proj.data());
        for (std::size_t k = 0; k < d; ++k)
            x[k] += proj[k];
        layernorm(x.data(), 1, d, P[base + kLn2G].data.data(), P[base + kLn2B].data.data(), ln.data(), nullptr,
                  nullptr);
        linear(ln.data(), 1, d, P[base + kW1].data.data(), P[base + kB1].data.data(), 4 * d, hpre.data());
        for (double& h : hpre)
            h = gelu(h);
        linear(hpre.data(), 1, 4 * d, P[base + kW2].data.data(), P[base + kB2].data.data(), d, proj.data());
        for (std::size_t k = 0; k < d; ++k)
            x[k] += proj[k];
    }
    layernorm(x.data(), 1, d, P[lnf_g(c)].data.data(), P[lnf_b(c)].data.data(), ln.data(), nullptr, nullptr);
    logits_.resize(V);
    linear(ln.data(), 1, d, P[head_idx(c)].data.data(), nullptr, V, logits_.data());
    ++pos_;
    return logits_;
}

std::vector<double> masked_logits(std::span<const double> logits, std::size_t position, std::size_t groups,
                                  const Vocabulary& vocab, std::size_t max_components, std::size_t context_length)
{
    KindSet legal = legal_kinds(position);
    if (legal.contains(TokenKind::Component) &&
        (groups >= max_components || position + kGroupSize + 1 > context_length))
        legal = {TokenKind::Eos};
    std::vector<double> out(logits.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t id = 0; id < logits.size(); ++id) {
        const TokenKind kind = vocab.kind_of(static_cast<TokenId>(id));
        if (kind != TokenKind::Pad && legal.contains(kind))
            out[id] = logits[id];
    }
    return out;
}

std::vector<double> masked_softmax(std::span<const double> masked, double temperature)
{
    std::vector<double> p(masked.size(), 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : masked)
        mx = std::max(mx, z);
    if (!std::isfinite(mx))
        throw Error(ErrorCode::InvalidArgument, "no legal token");
    double sum = 0.0;
    for (std::size_t i = 0; i < masked.size(); ++i) {
        if (std::isfinite(masked[i])) {
            p[i] = std::exp((masked[i] - mx) / temperature);
            sum += p[i];
        }
    }
    for (double& v : p)
        v /= sum;
    return p;
}

namespace {

TokenId pick_token(std::vector<double> masked, const SamplerConfig& sampler, std::mt19937_64& rng)
{
    if (sampler.mode == SamplerConfig::Mode::Greedy) {
        // First maximum wins, so ties resolve to the lowest id.
        return static_cast<TokenId>(std::max_element(masked.begin(), masked.end()) - masked.begin());
    }
    if (!(sampler.temperature > 0.0))
        throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
    if (sampler.top_k > 0) {
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < masked.size(); ++i) {
            if (std::isfinite(masked[i]))
                order.push_back(i);
        }
        if (order.size() > sampler.top_k) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return masked[a] > masked[b]; });
            for (std::size_t i = sampler.top_k; i < order.size(); ++i)
                masked[order[i]] = -std::numeric_limits<double>::infinity();
        }
    }
    const std::vector<double> p = masked_softmax(masked, sampler.temperature);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0)
            continue;
        last = i;
        acc += p[i];
        if (u < acc)
            return static_cast<TokenId>(i);
    }
    return static_cast<TokenId>(last);
}

} // namespace

TokenSequence generate(const Parameters& params, const Vocabulary& vocab, std::string_view category,
                       const SamplerConfig& sampler, std::uint64_t seed, std::size_t max_components)
{
    if (params.config.vocab_size != vocab.size())
        throw Error(ErrorCode::VocabularyMismatch,
                    fmt::format("model vocabulary {} vs {}", params.config.vocab_size, vocab.size()));
    const auto cat = vocab.category_token(category);
    if (!cat)
        throw Error(ErrorCode::UnknownCategory, fmt::format("'{}'", category));
    const std::size_t context = params.config.context_length;
    max_components = std::min(max_components, (context - 3) / kGroupSize);

    std::mt19937_64 rng(seed);
    IncrementalDecoder dec(params);
    TokenSequence seq{kBos, *cat};
    dec.push(kBos);
    std::span<const double> logits = dec.push(*cat);
    std::size_t groups = 0;
    while (true) {
        const std::size_t pos = seq.size();
        const TokenId next = pick_token(masked_logits(logits, pos, groups, vocab, max_components, context),
                                        sampler, rng);
        seq.push_back(next);
        if (next == kEos)
            break;
        if ((pos - 2) % kGroupSize == kGroupSize - 1)
            ++groups;
        logits = dec.push(next);
    }
    return seq;
}

// ------------------------------------------------------------------ checkpoints

namespace {

constexpr char kMagic[4] = {'S', 'V', 'G', 'F'};
constexpr std::uint32_t kCheckpointVersion = 1;

class Writer {
public:
    void bytes(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    template <typename T>
    void le(T v)
    {
        static_assert(std::is_integral_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i)
            out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
    T le()
    {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::span<const std::uint8_t> take(std::size_t n)
    {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > in_.size())
            throw Error(ErrorCode::VersionMismatch, "checkpoint truncated");
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ck)
{
    Writer w;
    w.bytes(kMagic, 4);
    w.le<std::uint32_t>(kCheckpointVersion);
    const ModelConfig& c = ck.params.config;
    w.le<std::uint64_t>(c.vocab_size);
    w.le<std::uint64_t>(c.embed_dim);
    w.le<std::uint64_t>(c.layers);
    w.le<std::uint64_t>(c.heads);
    w.le<std::uint64_t>(c.max_components);
    w.le<std::uint64_t>(c.context_length);
    w.f64(c.dropout);
    w.le<std::uint64_t>(c.seed);
    const TrainConfig& t = ck.train;
    w.le<std::uint64_t>(t.epochs);
    w.le<std::uint64_t>(t.batch_size);
    w.f64(t.optim.lr);
    w.f64(t.optim.beta1);
    w.f64(t.optim.beta2);
    w.f64(t.optim.eps);
    w.f64(t.optim.weight_decay);
    w.le<std::uint64_t>(t.seed);
    w.le<std::uint8_t>(t.max_steps ? 1 : 0);
    w.le<std::uint64_t>(t.max_steps.value_or(0));
    w.le<std::uint8_t>(t.strict ? 1 : 0);
    w.le<std::uint64_t>(ck.vocab_hash);
    w.le<std::uint64_t>(ck.params.tensors.size());
    for (const auto& tensor : ck.params.tensors) {
        w.le<std::uint64_t>(tensor.size());
        for (double v : tensor.data)
            w.f64(v);
    }
    return std::move(w.out);
}

Checkpoint checkpoint_from_bytes(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    const auto magic = r.take(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::VersionMismatch, "bad checkpoint magic");
    const auto version = r.le<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw Error(ErrorCode::VersionMismatch, fmt::format("checkpoint version {} (expected {})", version, kCheckpointVersion));
    Checkpoint ck;
    ModelConfig c;
    c.vocab_size = r.le<std::uint64_t>();
    c.embed_dim = r.le<std::uint64_t>();
    c.layers = r.le<std::uint64_t>();
    c.heads = r.le<std::uint64_t>();
    c.max_components = r.le<std::uint64_t>();
    c.context_length = r.le<std::uint64_t>();
    c.dropout = r.f64();
    c.seed = r.le<std::uint64_t>();
    TrainConfig& t = ck.train;
    t.epochs = r.le<std::uint64_t>();
    t.batch_size = r.le<std::uint64_t>();
    t.optim.lr = r.f64();
    t.optim.beta1 = r.f64();
    t.optim.beta2 = r.f64();
    t.optim.eps = r.f64();
    t.optim.weight_decay = r.f64();
    t.seed = r.le<std::uint64_t>();
    const bool has_max = r.le<std::uint8_t>() != 0;
    const auto max_steps = r.le<std::uint64_t>();
    if (has_max)
        t.max_steps = max_steps;
    t.strict = r.le<std::uint8_t>() != 0;
    ck.vocab_hash = r.le<std::uint64_t>();
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::VersionMismatch, fmt::format("checkpoint config invalid: {}", e.what()));
    }
    ck.params = shaped(c);
    const auto count = r.le<std::uint64_t>();
    if (count != ck.params.tensors.size())
        throw Error(ErrorCode::VersionMismatch, fmt::format("checkpoint has {} tensors, expected {}", count,
                                                            ck.params.tensors.size()));
    for (auto& tensor : ck.params.tensors) {
        const auto n = r.le<std::uint64_t>();
        if (n != tensor.size())
            throw Error(ErrorCode::VersionMismatch, fmt::format("tensor {} size {} (expected {})", tensor.name, n, tensor.size()));
        for (double& v : tensor.data)
            v = r.f64();
    }
    if (!r.done())
        throw Error(ErrorCode::VersionMismatch, "trailing bytes after checkpoint payload");
    return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path)
{
    const auto bytes = checkpoint_bytes(checkpoint);
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    const std::string raw = read_text_file(path);
    return checkpoint_from_bytes(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_vocab_hash)
{
    Checkpoint ck = load_checkpoint(path);
    if (ck.vocab_hash != expected_vocab_hash) {
        throw Error(ErrorCode::VocabularyMismatch,
                    fmt::format("checkpoint vocabulary hash {:016x} does not match {:016x}", ck.vocab_hash,
                                expected_vocab_hash));
    }
    return ck;
}

} // namespace svgforge
