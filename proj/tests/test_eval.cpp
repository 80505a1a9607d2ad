#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bow/data.hpp"
#include "bow/errors.hpp"
#include "bow/eval.hpp"
#include "bow/model.hpp"
#include "bow/reward.hpp"
#include "helpers.hpp"

using namespace bow;

namespace {

// Policy whose window-1 features force a deterministic token chain from the
// reason marker: <reason> -> first, first -> second, ... -> <eos>.
LogLinearModel chain_policy(const Vocabulary& vocab, const std::vector<std::string>& chain) {
    LogLinearModel policy(512, vocab.size(), 1);
    auto force = [&](const TokenSequence& prefix, TokenId next) {
        for (std::size_t f : policy.active_features(prefix)) {
            policy.mutable_weights()[f * vocab.size() + next] += 200.0;
        }
    };
    TokenSequence prefix = {vocab.reason_start()};
    for (const std::string& word : chain) {
        force(prefix, *vocab.find(word));
        prefix = {*vocab.find(word)};
    }
    force(prefix, vocab.eos());
    return policy;
}

}  // namespace

TEST_CASE("majority vote follows the lowest-index tie rule") {
    CHECK(majority_vote({0, 0, 1}, 2) == 0);
    CHECK(majority_vote({0, 1}, 2) == 0);
    CHECK(majority_vote({1, 1, 0}, 2) == 1);
    CHECK(majority_vote({2, 2, 1, 1, 0}, 3) == 1);  // 2-2 tie breaks low
    CHECK_THROWS_AS(majority_vote({5}, 2), Error);
}

TEST_CASE("score_candidates equals the full distribution restricted to candidates") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    const NGramModel judge =
        fit_ngram({encode("a b c a", vocab), encode("b c a b", vocab)}, 2, 0.1, vocab.size());
    Trajectory traj;
    traj.tokens = encode("a b", vocab);
    traj.log_probs = {0.0, 0.0};
    const std::vector<TokenId> candidates = {*vocab.find("a"), *vocab.find("c"), *vocab.find("d")};
    const std::vector<double> scores = score_candidates(judge, traj, candidates, vocab.eos(), 1.0);
    const TokenDistribution full = judge_distribution(judge, traj.tokens, 1.0);
    REQUIRE(scores.size() == candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        CHECK(scores[i] == full[candidates[i]]);
    }
    CHECK_THROWS_AS(score_candidates(judge, traj, {vocab.size() + 3}, vocab.eos(), 1.0),
                    CandidateOutOfVocabularyError);
}

TEST_CASE("uniform judge makes every vote fall on index 0") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    // A judge over unseen histories yields the uniform distribution.
    const NGramModel judge = fit_ngram({encode("a a", vocab)}, 2, 0.1, vocab.size());
    const LogLinearModel policy = chain_policy(vocab, {"b"});
    EvalInstance instance;
    instance.context = encode("c", vocab);
    instance.candidates = {*vocab.find("c"), *vocab.find("d")};
    instance.gold_index = 0;
    const EvalOutcome outcome =
        self_consistency_predict(policy, judge, instance, vocab, 5, 0.8, 3);
    for (std::size_t vote : outcome.votes) CHECK(vote == 0);
    CHECK(outcome.prediction == 0);
    CHECK(outcome.correct);
}

TEST_CASE("hint trajectories rank the gold-category candidate first on the synthetic judge") {
    SynthEnvSpec spec;
    spec.categories = 4;
    spec.words_per_category = 3;
    spec.templates = 4;
    spec.corpus_size = 16;
    const SynthEnv env = synth_env_generate(spec, 21);
    const NGramModel judge = fit_ngram(env.judge_corpus, 2, 0.1, env.vocab.size());

    for (std::size_t c = 0; c < spec.categories; ++c) {
        Trajectory traj;
        traj.tokens = {env.cue_tokens[c], env.vocab.eos()};
        traj.log_probs = {0.0, 0.0};
        for (std::size_t other = 0; other < spec.categories; ++other) {
            if (other == c) continue;
            const std::vector<TokenId> candidates = {env.category_words[other][0],
                                                     env.category_words[c][0]};
            const std::vector<double> scores =
                score_candidates(judge, traj, candidates, env.vocab.eos(), 1.0);
            CHECK(scores[1] > scores[0]);
        }
    }
}

TEST_CASE("self consistency with one sample returns that vote, deterministically") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    Rng init(3);
    const LogLinearModel policy = bowtest::random_model(16, vocab.size(), 2, init);
    const NGramModel judge =
        fit_ngram({encode("a b c", vocab), encode("c a b", vocab)}, 2, 0.1, vocab.size());
    EvalInstance instance;
    instance.context = encode("a b", vocab);
    instance.candidates = {*vocab.find("c"), *vocab.find("d")};
    instance.gold_index = 0;

    const EvalOutcome once = self_consistency_predict(policy, judge, instance, vocab, 1, 0.8, 9);
    CHECK(once.votes.size() == 1);
    CHECK(once.prediction == once.votes[0]);

    const EvalOutcome again = self_consistency_predict(policy, judge, instance, vocab, 10, 0.8, 9);
    const EvalOutcome same = self_consistency_predict(policy, judge, instance, vocab, 10, 0.8, 9);
    CHECK(again.votes == same.votes);
    CHECK(again.prediction == same.prediction);
}

TEST_CASE("a fixed-trajectory policy always returns that trajectory's vote") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    const LogLinearModel policy = chain_policy(vocab, {"a"});
    const NGramModel judge =
        fit_ngram({encode("a c", vocab), encode("a c", vocab)}, 2, 0.1, vocab.size());
    EvalInstance instance;
    instance.context = encode("b", vocab);
    instance.candidates = {*vocab.find("d"), *vocab.find("c")};
    instance.gold_index = 1;
    // Judge after "a" strongly prefers "c": every sample votes index 1.
    for (std::size_t samples : {1, 3, 7}) {
        const EvalOutcome outcome =
            self_consistency_predict(policy, judge, instance, vocab, samples, 0.8, 5);
        CHECK(outcome.prediction == 1);
        CHECK(outcome.correct);
    }
}

TEST_CASE("no-judge truncation keeps the prefix through the box marker") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    // Chain: <reason> -> a -> <box> -> c -> <eos>. After the box the policy
    // overwhelmingly predicts c, so candidate scoring on the truncated
    // prefix must pick c.
    const LogLinearModel policy = chain_policy(vocab, {"a", "<box>", "c"});
    EvalInstance instance;
    instance.context = encode("b", vocab);
    instance.candidates = {*vocab.find("d"), *vocab.find("c")};
    instance.gold_index = 1;
    const EvalOutcome outcome = no_judge_predict(policy, instance, vocab, 3, 0.8, 11);
    CHECK(outcome.prediction == 1);
    CHECK(outcome.correct);

    const EvalOutcome repeat = no_judge_predict(policy, instance, vocab, 3, 0.8, 11);
    CHECK(repeat.votes == outcome.votes);
}

TEST_CASE("no-judge reward checks the first boxed token only") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    const TokenId box = *vocab.box_open();
    const TokenId gold = *vocab.find("c");

    Trajectory boxed_gold;
    boxed_gold.tokens = {*vocab.find("a"), box, gold, vocab.eos()};
    boxed_gold.log_probs = {0, 0, 0, 0};
    CHECK(no_judge_reward(boxed_gold, gold, vocab) == 1.0);

    Trajectory boxed_other;
    boxed_other.tokens = {box, *vocab.find("d"), vocab.eos()};
    boxed_other.log_probs = {0, 0, 0};
    CHECK(no_judge_reward(boxed_other, gold, vocab) == 0.0);

    Trajectory no_marker;
    no_marker.tokens = {*vocab.find("a"), vocab.eos()};
    no_marker.log_probs = {0, 0};
    CHECK(no_judge_reward(no_marker, gold, vocab) == 0.0);

    Trajectory marker_last;
    marker_last.tokens = {*vocab.find("a"), box};
    marker_last.log_probs = {0, 0};
    CHECK(no_judge_reward(marker_last, gold, vocab) == 0.0);
}

TEST_CASE("slm loss selects kept pairs and matches hand values") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    Rng init(13);
    const LogLinearModel model = bowtest::random_model(12, vocab.size(), 2, init);

    std::vector<ContextTargetPair> pairs(3);
    pairs[0].context = encode("a b", vocab);
    pairs[0].gold = *vocab.find("c");
    pairs[0].verdict = Verdict::kKept;
    pairs[1].context = encode("b", vocab);
    pairs[1].gold = *vocab.find("a");
    pairs[1].verdict = Verdict::kDroppedFunctional;
    pairs[2].context = encode("c a", vocab);
    pairs[2].gold = *vocab.find("b");
    pairs[2].verdict = Verdict::kKept;

    const SlmEval eval = slm_loss(model, pairs);
    CHECK(eval.touched == std::vector<std::size_t>{0, 2});
    const double expected =
        -(std::log(next_token_distribution(model, pairs[0].context, 1.0)[pairs[0].gold]) +
          std::log(next_token_distribution(model, pairs[2].context, 1.0)[pairs[2].gold])) /
        2.0;
    CHECK(eval.loss == doctest::Approx(expected).epsilon(1e-12));

    // Single kept pair: loss is -ln p.
    const SlmEval single = slm_loss(model, {pairs[0]});
    const double p = next_token_distribution(model, pairs[0].context, 1.0)[pairs[0].gold];
    CHECK(single.loss == doctest::Approx(-std::log(p)).epsilon(1e-12));

    // A mask selecting everything equals the full cross-entropy.
    std::vector<ContextTargetPair> all = pairs;
    for (auto& pair : all) pair.verdict = Verdict::kKept;
    const SlmEval full = slm_loss(model, all);
    double manual = 0.0;
    for (const auto& pair : all) {
        manual -= std::log(next_token_distribution(model, pair.context, 1.0)[pair.gold]);
    }
    CHECK(full.loss == doctest::Approx(manual / 3.0).epsilon(1e-12));

    std::vector<ContextTargetPair> none = pairs;
    for (auto& pair : none) pair.verdict = Verdict::kDroppedDeterministic;
    CHECK_THROWS_AS(slm_loss(model, none), EmptySelectionError);
}

TEST_CASE("slm gradient matches central finite differences") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    Rng rng(17);
    const double h = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
        LogLinearModel model = bowtest::random_model(9, vocab.size(), 2, rng);
        std::vector<ContextTargetPair> pairs(2);
        pairs[0].context = bowtest::random_context(vocab.size(), 3, rng);
        pairs[0].gold = rng.next_below(vocab.size());
        pairs[1].context = bowtest::random_context(vocab.size(), 2, rng);
        pairs[1].gold = rng.next_below(vocab.size());
        const SlmEval eval = slm_loss(model, pairs);
        for (std::size_t i = 0; i < model.weights().size(); ++i) {
            auto loss_at = [&](double delta) {
                LogLinearModel probe = model;
                probe.mutable_weights()[i] += delta;
                return slm_loss(probe, pairs).loss;
            };
            const double numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            CHECK(bowtest::grad_close(eval.grad[i], numeric));
        }
    }
}

TEST_CASE("train_slm reduces the selective loss and touches only kept pairs") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    std::vector<ContextTargetPair> pairs;
    for (int i = 0; i < 12; ++i) {
        ContextTargetPair pair;
        pair.context = encode(i % 2 == 0 ? "a b" : "c", vocab);
        pair.gold = *vocab.find(i % 2 == 0 ? "c" : "a");
        pair.verdict = i % 3 == 0 ? Verdict::kDroppedFunctional : Verdict::kKept;
        pairs.push_back(pair);
    }
    LogLinearModel policy(16, vocab.size(), 2);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.mini_batch = 4;
    cfg.total_batch = 4;
    cfg.epochs = 10;
    cfg.weight_decay = 0.0;
    const SlmTrainResult result = train_slm(policy, pairs, cfg);
    REQUIRE(!result.losses.empty());
    CHECK(result.losses.back() < result.losses.front());
    for (std::size_t index : result.touched) {
        CHECK(pairs[index].verdict == Verdict::kKept);
    }
    std::size_t kept = 0;
    for (const auto& pair : pairs) kept += pair.verdict == Verdict::kKept ? 1 : 0;
    CHECK(result.touched.size() == kept);
}

TEST_CASE("uniform random voter scores near chance on the synthetic eval set") {
    SynthEnvSpec spec;
    spec.corpus_size = 8000;  // 2000 held-out instances
    const SynthEnv env = synth_env_generate(spec, 31);
    REQUIRE(env.eval_instances.size() >= 2000);
    Rng rng(99);
    std::size_t hits = 0;
    for (const EvalInstance& instance : env.eval_instances) {
        hits += rng.next_below(instance.candidates.size()) == instance.gold_index ? 1 : 0;
    }
    const double accuracy =
        static_cast<double>(hits) / static_cast<double>(env.eval_instances.size());
    CHECK(std::abs(accuracy - 0.25) < 0.03);
}

TEST_CASE("run_evaluation writes records plus a bootstrap summary") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    const LogLinearModel policy = chain_policy(vocab, {"a"});
    const NGramModel judge =
        fit_ngram({encode("a c", vocab), encode("a c", vocab)}, 2, 0.1, vocab.size());
    std::vector<EvalInstance> instances(4);
    for (auto& instance : instances) {
        instance.context = encode("b", vocab);
        instance.candidates = {*vocab.find("d"), *vocab.find("c")};
        instance.gold_index = 1;
    }
    const std::string path = "results_test.jsonl";
    const EvalSummary summary = run_evaluation(policy, &judge, instances, vocab, false, 3, 0.8,
                                               17, 8, 1.0, path, R"({"config_hash":"t"})");
    CHECK(summary.accuracy == 1.0);
    CHECK(summary.instances == 4);
    CHECK(summary.ci_low <= summary.accuracy);
    CHECK(summary.ci_high >= summary.accuracy);

    std::ifstream in(path);
    std::size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + 4 + 1);  // header, records, summary
    std::filesystem::remove(path);

    CHECK_THROWS_AS(
        run_evaluation(policy, nullptr, instances, vocab, false, 1, 0.8, 1, 8, 1.0, "", ""),
        Error);
}
