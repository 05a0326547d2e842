#pragma once

#include "svgforge/tokens.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace svgforge {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t max_components = 32;
    std::size_t context_length = 240; // >= 3 + 7 * max_components
    double dropout = 0.0;             // only 0 is supported
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Smallest multiple of 16 that fits BOS, category, EOS and `max_components` groups.
std::size_t context_for(std::size_t max_components);

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool decay = false; // receives decoupled weight decay

    std::size_t size() const { return data.size(); }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Tensor order: tok_emb [V,d], pos_emb [C,d]; per layer ln1.{g,b}, attn.{wq,bq,wk,bk,wv,bv,wo,bo},
/// ln2.{g,b}, mlp.{w1,b1,w2,b2}; then lnf.{g,b}, head [d,V]. Linear weights are stored [in,out].
struct Parameters {
    ModelConfig config;
    std::vector<Tensor> tensors;

    std::size_t count() const;
    bool all_finite() const;
    Parameters zeros_like() const;

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

using Gradients = Parameters;

/// Closed-form parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& config);

Parameters init_params(const ModelConfig& config);

/// Row-major [batch x length] token ids.
struct TokenBatch {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::vector<TokenId> ids;
};

/// Row-major [batch x length x vocab].
struct Logits {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::size_t vocab = 0;
    std::vector<double> data;

    std::span<const double> at(std::size_t b, std::size_t t) const
    {
        return std::span<const double>(data).subspan((b * length + t) * vocab, vocab);
    }
};

/// Logits at position t parameterize the next token. Throws TokenOutOfRange.
Logits forward(const Parameters& params, const TokenBatch& tokens);

/// Mean over masked positions of -log softmax(logits)[target]. Throws EmptyMask.
double nll_loss(const Logits& logits, std::span<const TokenId> targets, std::span<const double> mask);

struct TrainingBatch {
    TokenBatch inputs;
    std::vector<TokenId> targets; // [batch x length]
    std::vector<double> mask;     // 1 where targets holds a real next token

    /// Inputs are seq[0..n-2] and targets seq[1..n-1], right-padded with PAD.
    static TrainingBatch from_sequences(std::span<const TokenSequence> sequences);
};

struct LossAndGradients {
    double loss = 0.0;
    Gradients grads;
};

/// Exact reverse-mode gradients of nll_loss. An all-zero mask gives zero loss and gradients.
LossAndGradients backward(const Parameters& params, const TrainingBatch& batch);

struct AdamWConfig {
    double lr = 6e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

struct OptimState {
    AdamWConfig hyper;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;

    static OptimState for_params(const std::vector<Tensor>& params, AdamWConfig hyper);
};

void adamw_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimState& state);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    AdamWConfig optim;
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_steps; // stop early after this many optimizer steps
    bool strict = false;                  // SequenceTooLong aborts instead of skipping

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LossRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double loss = 0.0;
};

struct TrainResult {
    Parameters params;
    std::vector<LossRecord> steps;
    std::vector<double> epoch_mean_loss;
    std::size_t skipped = 0;
};

using EpochCallback = std::function<void(const Parameters&, std::size_t epoch)>;

/// Seeded shuffled mini-batches; deterministic for a given seed. Sequences longer than the
/// context are skipped with a warning, or rejected with SequenceTooLong when strict.
TrainResult train(std::span<const TokenSequence> corpus, const ModelConfig& config, const TrainConfig& train_config,
                  const EpochCallback& on_epoch = {});

std::string loss_csv(std::span<const LossRecord> records);

/// Single-sequence incremental decoder with a key/value cache. logits_for(token) consumes the
/// next token and returns the next-token logits; results match forward() on the same prefix.
class IncrementalDecoder {
public:
    explicit IncrementalDecoder(const Parameters& params);

    std::span<const double> push(TokenId token);
    std::size_t position() const { return pos_; }

private:
    const Parameters& params_;
    std::size_t pos_ = 0;
    std::vector<std::vector<double>> keys_;   // per layer [context x d]
    std::vector<std::vector<double>> values_; // per layer [context x d]
    std::vector<double> logits_;
};

struct SamplerConfig {
    enum class Mode { Greedy, Sample };
    Mode mode = Mode::Sample;
    double temperature = 1.0;
    std::size_t top_k = 40; // 0 disables the cut

    static SamplerConfig greedy() { return {Mode::Greedy, 1.0, 0}; }
};

/// Logits masked to the token kinds legal after `prefix`; illegal entries become -inf.
/// PAD is never legal; EOS is forced once `max_components` groups exist or the context is full.
std::vector<double> masked_logits(std::span<const double> logits, std::size_t position, std::size_t groups,
                                  const Vocabulary& vocab, std::size_t max_components, std::size_t context_length);

/// Softmax of masked logits at `temperature`; illegal entries get probability 0.
std::vector<double> masked_softmax(std::span<const double> masked, double temperature);

TokenSequence generate(const Parameters& params, const Vocabulary& vocab, std::string_view category,
                       const SamplerConfig& sampler, std::uint64_t seed, std::size_t max_components);

struct Checkpoint {
    Parameters params;
    TrainConfig train;
    std::uint64_t vocab_hash = 0;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws IoError or VersionMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Additionally throws VocabularyMismatch when the stored hash differs.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_vocab_hash);

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_bytes(std::span<const std::uint8_t> bytes);

} // namespace svgforge
