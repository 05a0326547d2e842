#pragma once

#include "svgforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace svgforge::testing {

inline ModelConfig tiny_config(std::uint64_t seed = 1)
{
    ModelConfig c;
    c.vocab_size = 11;
    c.embed_dim = 8;
    c.layers = 1;
    c.heads = 2;
    c.max_components = 1;
    c.context_length = 12;
    c.seed = seed;
    return c;
}

// Random rows starting with BOS; ragged lengths exercise the padding mask.
inline TrainingBatch random_batch(std::mt19937_64& rng, std::size_t vocab, std::size_t rows, std::size_t max_len)
{
    std::vector<TokenSequence> seqs;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t len = std::uniform_int_distribution<std::size_t>(2, max_len)(rng);
        TokenSequence s{kBos};
        while (s.size() < len)
            s.push_back(static_cast<TokenId>(std::uniform_int_distribution<std::size_t>(1, vocab - 1)(rng)));
        seqs.push_back(std::move(s));
    }
    return TrainingBatch::from_sequences(seqs);
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t checked = 0;
};

// Central differences on every scalar of every tensor. Relative error uses a floor of
// `floor` in the denominator so exact zeros (unused embedding rows) compare cleanly.
inline GradCheckResult gradient_check(const Parameters& params, const TrainingBatch& batch, double h = 1e-5,
                                      double floor = 1e-6)
{
    GradCheckResult res;
    const LossAndGradients lg = backward(params, batch);
    Parameters p = params;
    auto loss_at = [&]() { return nll_loss(forward(p, batch.inputs), batch.targets, batch.mask); };
    for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        for (std::size_t i = 0; i < p.tensors[t].data.size(); ++i) {
            const double orig = p.tensors[t].data[i];
            p.tensors[t].data[i] = orig + h;
            const double up = loss_at();
            p.tensors[t].data[i] = orig - h;
            const double down = loss_at();
            p.tensors[t].data[i] = orig;
            const double numeric = (up - down) / (2 * h);
            const double analytic = lg.grads.tensors[t].data[i];
            const double rel =
                std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), floor});
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_tensor = p.tensors[t].name;
            }
            ++res.checked;
        }
    }
    return res;
}

// Fresh parameters are nearly uniform; perturbing them makes every gradient path non-trivial.
inline Parameters perturbed(const ModelConfig& c, double stddev, std::uint64_t seed)
{
    Parameters p = init_params(c);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, stddev);
    for (auto& t : p.tensors)
        for (double& v : t.data)
            v += n(rng);
    return p;
}

// Stepwise log-probabilities of `seq` under the model, one forward call per prefix.
inline std::vector<double> stepwise_log_probs(const Parameters& params, const TokenSequence& seq)
{
    std::vector<double> out;
    for (std::size_t t = 1; t < seq.size(); ++t) {
        TokenBatch b{1, t, TokenSequence(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(t))};
        const Logits l = forward(params, b);
        const auto row = l.at(0, t - 1);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0;
        for (double v : row)
            z += std::exp(v - mx);
        out.push_back(row[static_cast<std::size_t>(seq[t])] - mx - std::log(z));
    }
    return out;
}

} // namespace svgforge::testing
