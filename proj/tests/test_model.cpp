#include "model_oracles.hpp"
#include "support.hpp"

#include "svgforge/error.hpp"
#include "svgforge/io.hpp"
#include "svgforge/model.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace svgforge;
using namespace svgforge::testing;

TEST_CASE("config validation and context")
{
    CHECK(context_for(32) == 240);
    ModelConfig c;
    c.vocab_size = 439;
    CHECK_NOTHROW(c.validate());
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), Error);
    c.heads = 4;
    c.dropout = 0.1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("parameter count")
{
    ModelConfig c;
    c.vocab_size = 439;
    const Parameters p = init_params(c);
    // tok 439*64 + pos 240*64 + 2 * (ln 128 + attn 4*(4096+64) + ln 128 + mlp 64*256+256 + 256*64+64) + lnf 128 + head 64*439
    const std::size_t per_layer = 128 + 4 * (4096 + 64) + 128 + (16384 + 256) + (16384 + 64);
    const std::size_t expected = 439 * 64 + 240 * 64 + 2 * per_layer + 128 + 64 * 439;
    CHECK(expected == 171648);
    CHECK(p.count() == expected);
    CHECK(parameter_count(c) == expected);
}

TEST_CASE("init determinism")
{
    const ModelConfig c = tiny_config(4);
    CHECK(init_params(c) == init_params(c));
    CHECK_FALSE(init_params(c) == init_params(tiny_config(5)));
    const Parameters p = init_params(c);
    for (const auto& t : p.tensors) {
        if (t.name.find(".g") != std::string::npos)
            CHECK(std::all_of(t.data.begin(), t.data.end(), [](double v) { return v == 1.0; }));
    }
}

TEST_CASE("causality and batching")
{
    const ModelConfig c = tiny_config();
    const Parameters p = perturbed(c, 0.3, 2);
    std::mt19937_64 rng(8);
    TokenSequence row{kBos, 4, 7, 3, 9, 5, 6, 10, 8};
    const Logits base = forward(p, {1, row.size(), row});
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t t = std::uniform_int_distribution<std::size_t>(1, row.size() - 2)(rng);
        TokenSequence shuffled = row;
        std::shuffle(shuffled.begin() + static_cast<std::ptrdiff_t>(t) + 1, shuffled.end(), rng);
        const Logits l = forward(p, {1, row.size(), shuffled});
        for (std::size_t s = 0; s <= t; ++s) {
            const auto a = base.at(0, s), b = l.at(0, s);
            for (std::size_t k = 0; k < a.size(); ++k)
                REQUIRE(a[k] == b[k]);
        }
    }

    const TokenSequence other{kBos, 3, 3, 2, 9, 1, 0, 10, 4};
    TokenSequence both = row;
    both.insert(both.end(), other.begin(), other.end());
    const Logits batched = forward(p, {2, row.size(), both});
    const Logits single = forward(p, {1, other.size(), other});
    for (std::size_t s = 0; s < row.size(); ++s) {
        for (std::size_t k = 0; k < c.vocab_size; ++k) {
            CHECK(std::abs(batched.at(0, s)[k] - base.at(0, s)[k]) < 1e-6);
            CHECK(std::abs(batched.at(1, s)[k] - single.at(0, s)[k]) < 1e-6);
        }
    }
    TokenSequence twin = row;
    twin.insert(twin.end(), row.begin(), row.end());
    const Logits dup = forward(p, {2, row.size(), twin});
    for (std::size_t s = 0; s < row.size(); ++s)
        CHECK(std::equal(dup.at(0, s).begin(), dup.at(0, s).end(), dup.at(1, s).begin()));

    CHECK_THROWS_AS(forward(p, {1, 2, {kBos, 11}}), Error);
}

TEST_CASE("nll_loss")
{
    Logits uniform{1, 3, 11, std::vector<double>(33, 0.0)};
    const std::vector<TokenId> targets{1, 2, 3};
    CHECK(nll_loss(uniform, targets, std::vector<double>{1, 1, 0}) == doctest::Approx(std::log(11.0)).epsilon(1e-15));
    Logits sharp = uniform;
    for (std::size_t t = 0; t < 3; ++t)
        sharp.data[t * 11 + static_cast<std::size_t>(targets[t])] = 60.0;
    CHECK(nll_loss(sharp, targets, std::vector<double>{1, 1, 1}) < 1e-20);
    CHECK_THROWS_AS(nll_loss(uniform, targets, std::vector<double>{0, 0, 0}), Error);
}

TEST_CASE("sum of step log-probs equals log of product")
{
    const Parameters p = perturbed(tiny_config(), 0.3, 1);
    const TokenSequence seq{kBos, 5, 9, 2, 7};
    const auto lp = stepwise_log_probs(p, seq);
    double sum = 0, prod = 1;
    for (double v : lp) {
        sum -= v;
        prod *= std::exp(v);
    }
    CHECK(std::abs(sum - (-std::log(prod))) < 1e-9);

    // and the batched loss agrees with the stepwise mean
    const TrainingBatch b = TrainingBatch::from_sequences(std::vector<TokenSequence>{seq});
    CHECK(nll_loss(forward(p, b.inputs), b.targets, b.mask) == doctest::Approx(sum / lp.size()).epsilon(1e-12));
}

TEST_CASE("gradient check on the tiny config")
{
    const ModelConfig c = tiny_config(3);
    const Parameters p = perturbed(c, 0.3, 7);
    std::mt19937_64 rng(4);
    const TrainingBatch batch = random_batch(rng, c.vocab_size, 3, 13);
    const GradCheckResult r = gradient_check(p, batch);
    INFO("worst tensor " << r.worst_tensor);
    CHECK(r.checked == p.count());
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("backward edge cases")
{
    const ModelConfig c = tiny_config();
    const Parameters p = perturbed(c, 0.3, 3);
    TrainingBatch zero = TrainingBatch::from_sequences(std::vector<TokenSequence>{{kBos, 4, 5}});
    std::fill(zero.mask.begin(), zero.mask.end(), 0.0);
    const LossAndGradients z = backward(p, zero);
    CHECK(z.loss == 0.0);
    for (const auto& t : z.grads.tensors)
        CHECK(std::all_of(t.data.begin(), t.data.end(), [](double v) { return v == 0.0; }));

    const TokenSequence s{kBos, 4, 5, 9};
    const LossAndGradients one = backward(p, TrainingBatch::from_sequences(std::vector<TokenSequence>{s}));
    const LossAndGradients two = backward(p, TrainingBatch::from_sequences(std::vector<TokenSequence>{s, s}));
    CHECK(one.loss == doctest::Approx(two.loss).epsilon(1e-14));
    for (std::size_t t = 0; t < one.grads.tensors.size(); ++t)
        for (std::size_t i = 0; i < one.grads.tensors[t].data.size(); ++i)
            REQUIRE(std::abs(one.grads.tensors[t].data[i] - two.grads.tensors[t].data[i]) < 1e-12);
}

TEST_CASE("adamw")
{
    std::vector<Tensor> w{{"w", {1}, {0.5}, true}};
    std::vector<Tensor> g{{"w", {1}, {0.0}, true}};

    OptimState s = OptimState::for_params(w, {6e-4, 0.9, 0.999, 1e-8, 0.0});
    adamw_step(w, g, s);
    CHECK(w[0].data[0] == 0.5);
    CHECK(s.step == 1);

    g[0].data[0] = 1.0;
    OptimState s1 = OptimState::for_params(w, {6e-4, 0.9, 0.999, 1e-8, 0.0});
    adamw_step(w, g, s1);
    CHECK(w[0].data[0] == doctest::Approx(0.5 - 6e-4).epsilon(1e-9));

    std::vector<Tensor> d{{"w", {2}, {2.0, -4.0}, true}};
    std::vector<Tensor> gz{{"w", {2}, {0.0, 0.0}, true}};
    OptimState sd = OptimState::for_params(d, {1e-2, 0.9, 0.999, 1e-8, 0.1});
    adamw_step(d, gz, sd);
    CHECK(d[0].data[0] == doctest::Approx(2.0 * (1 - 1e-3)));
    CHECK(d[0].data[1] == doctest::Approx(-4.0 * (1 - 1e-3)));

    std::vector<Tensor> bias{{"b", {1}, {2.0}, false}};
    OptimState sb = OptimState::for_params(bias, {1e-2, 0.9, 0.999, 1e-8, 0.1});
    adamw_step(bias, std::vector<Tensor>{{"b", {1}, {0.0}, false}}, sb);
    CHECK(bias[0].data[0] == 2.0);
}

TEST_CASE("incremental decoder matches forward")
{
    const ModelConfig c = tiny_config();
    const Parameters p = perturbed(c, 0.3, 5);
    const TokenSequence row{kBos, 4, 7, 3, 9, 5, 6, 10, 8, 1, 2, 3};
    const Logits full = forward(p, {1, row.size(), row});
    IncrementalDecoder dec(p);
    for (std::size_t t = 0; t < row.size(); ++t) {
        const auto l = dec.push(row[t]);
        for (std::size_t k = 0; k < c.vocab_size; ++k)
            REQUIRE(std::abs(l[k] - full.at(0, t)[k]) < 1e-9);
    }
    CHECK_THROWS_AS(dec.push(1), Error);
}

TEST_CASE("masked sampling")
{
    const Vocabulary v = small_vocab(2, 3);
    std::vector<double> logits(v.size(), 0.0);
    const auto m = masked_logits(logits, 2, 0, v, 32, 240);
    for (std::size_t id = 0; id < v.size(); ++id) {
        const auto kind = v.kind_of(static_cast<TokenId>(id));
        CHECK(std::isfinite(m[id]) == (kind == TokenKind::Component || kind == TokenKind::Eos));
    }
    const auto forced = masked_logits(logits, 9, 1, v, 1, 240);
    for (std::size_t id = 0; id < v.size(); ++id)
        CHECK(std::isfinite(forced[id]) == (static_cast<TokenId>(id) == kEos));
    const auto p = masked_softmax(m, 0.7);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[kPad] == 0.0);
}

TEST_CASE("generation is grammar-valid and greedy is deterministic")
{
    const Vocabulary v = small_vocab(2, 3);
    ModelConfig c;
    c.vocab_size = v.size();
    c.embed_dim = 16;
    c.heads = 2;
    c.layers = 1;
    c.max_components = 4;
    c.context_length = context_for(4);
    const Parameters p = perturbed(c, 0.2, 1);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const TokenSequence t = generate(p, v, "cat1", {}, seed, 4);
        REQUIRE(validate_sequence(t, v).ok());
        CHECK(t.size() <= 3 + 7 * 4);
    }
    CHECK(generate(p, v, "cat0", SamplerConfig::greedy(), 1, 4) == generate(p, v, "cat0", SamplerConfig::greedy(), 2, 4));
    CHECK_THROWS_AS(generate(p, v, "dog", {}, 0, 4), Error);
}

TEST_CASE("training loop")
{
    const Vocabulary v = small_vocab(2, 3);
    ModelConfig c;
    c.vocab_size = v.size();
    c.embed_dim = 16;
    c.heads = 2;
    c.layers = 1;
    c.max_components = 2;
    c.context_length = context_for(2);
    std::mt19937_64 rng(2);
    std::vector<TokenSequence> corpus;
    for (int i = 0; i < 6; ++i)
        corpus.push_back(random_sequence(rng, v, 1 + i % 2, i % 2));
    corpus.push_back(random_sequence(rng, v, 5, 0)); // too long for the context
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    std::size_t epochs_seen = 0;
    const TrainResult a = train(corpus, c, tc, [&](const Parameters&, std::size_t) { ++epochs_seen; });
    CHECK(a.skipped == 1);
    CHECK(epochs_seen == 3);
    CHECK(a.epoch_mean_loss.size() == 3);
    CHECK(a.steps.size() == 6);
    const double lnv = std::log(static_cast<double>(v.size()));
    CHECK(std::abs(a.epoch_mean_loss[0] - lnv) / lnv < 0.05);
    const TrainResult b = train(corpus, c, tc);
    CHECK(loss_csv(a.steps) == loss_csv(b.steps));
    CHECK(a.params == b.params);

    tc.strict = true;
    CHECK_THROWS_AS(train(corpus, c, tc), Error);
    tc.strict = false;
    tc.epochs = 0;
    CHECK(train(corpus, c, tc).params == init_params(c));
}

TEST_CASE("checkpoints")
{
    const ModelConfig c = tiny_config();
    Checkpoint ck{perturbed(c, 0.1, 1), {}, 0xabcdefull};
    ck.train.max_steps = 17;
    const auto bytes = checkpoint_bytes(ck);
    const Checkpoint back = checkpoint_from_bytes(bytes);
    CHECK(back.params == ck.params);
    CHECK(back.train == ck.train);
    CHECK(back.vocab_hash == ck.vocab_hash);
    CHECK(checkpoint_bytes(back) == bytes);

    auto bad = bytes;
    bad[0] = 'X';
    try {
        checkpoint_from_bytes(bad);
        FAIL("expected VersionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VersionMismatch);
    }

    const auto path = std::filesystem::temp_directory_path() / "svgforge_test.ckpt";
    save_checkpoint(ck, path);
    CHECK(load_checkpoint(path, 0xabcdefull).params == ck.params);
    try {
        load_checkpoint(path, 1);
        FAIL("expected VocabularyMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VocabularyMismatch);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), Error);
}
