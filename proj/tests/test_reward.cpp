#include <doctest.h>

#include <cmath>

#include "bow/errors.hpp"
#include "bow/model.hpp"
#include "bow/reward.hpp"
#include "helpers.hpp"

using namespace bow;

namespace {

TokenDistribution dist_of(std::vector<double> probs) { return TokenDistribution{std::move(probs)}; }

// Random distribution over v tokens (normalized exponentials).
TokenDistribution random_dist(std::size_t v, Rng& rng) {
    std::vector<double> probs(v);
    double sum = 0.0;
    for (double& p : probs) {
        p = std::exp(2.0 * (rng.next_double() - 0.5));
        sum += p;
    }
    for (double& p : probs) p /= sum;
    return dist_of(std::move(probs));
}

}  // namespace

TEST_CASE("judge distribution for identical inputs is identical") {
    const NGramModel judge = fit_ngram({{0, 1, 2}, {1, 2, 0}}, 2, 0.1, 3);
    const TokenSequence input = {1, 2};
    const TokenDistribution a = judge_distribution(judge, input, 5.0);
    const TokenDistribution b = judge_distribution(judge, input, 5.0);
    CHECK(a.probs == b.probs);
    CHECK_THROWS_AS(judge_distribution(judge, {}, 5.0), Error);
}

TEST_CASE("bigram judge with counts 3:1 gives [0.75, 0.25] at native temperature") {
    std::vector<TokenSequence> corpus;
    for (int i = 0; i < 3; ++i) corpus.push_back({0, 0});  // history (0) -> token 0
    corpus.push_back({0, 1});                              // history (0) -> token 1
    const NGramModel judge = fit_ngram(corpus, 2, 1e-12, 2);
    const TokenDistribution dist = judge_distribution(judge, {0}, 1.0);
    CHECK(dist[0] == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(dist[1] == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("base reward returns the gold probability inside the cutoff") {
    // Rank-1 gold with probability 0.7575 survives a K=100 cutoff.
    auto [r1, rank1] = base_reward(dist_of({0.7575, 0.2425}), 0, 100);
    CHECK(r1 == 0.7575);
    CHECK(rank1 == 1);

    // Gold ranked just past the cutoff gets 0.
    auto [r2, rank2] = base_reward(dist_of({0.5, 0.3, 0.2}), 1, 1);
    CHECK(r2 == 0.0);
    CHECK(rank2 == 2);

    // Uniform distribution, |V| <= K: no truncation effect for any gold.
    for (TokenId gold = 0; gold < 4; ++gold) {
        auto [r, rank] = base_reward(dist_of({0.25, 0.25, 0.25, 0.25}), gold, 100);
        CHECK(r == 0.25);
        CHECK(rank == gold + 1);  // ties rank by lower token id
    }

    CHECK_THROWS_AS(base_reward(dist_of({1.0, 0.0}), 5, 10), GoldOutOfVocabularyError);
}

TEST_CASE("top-K path equals the brute-force full-vocabulary lookup when K >= |V|") {
    Rng rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t v = 2 + rng.next_below(20);
        const TokenDistribution dist = random_dist(v, rng);
        const TokenId gold = rng.next_below(v);
        auto [r, rank] = base_reward(dist, gold, v + rng.next_below(10));
        CHECK(r == dist[gold]);
        CHECK(rank >= 1);
        CHECK(rank <= v);
    }
}

TEST_CASE("l1 penalty follows the reference-support rule") {
    CHECK(l1_penalty(dist_of({0.4, 0.6}), dist_of({0.4, 0.6}), 2) == 0.0);
    CHECK(l1_penalty(dist_of({1.0, 0.0}), dist_of({0.0, 1.0}), 2) == 2.0);
    // Support is the reference's top-1; the 0.5/0.5 tie breaks to token 0.
    CHECK(l1_penalty(dist_of({0.6, 0.4}), dist_of({0.5, 0.5}), 1) ==
          doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("l1 penalty is symmetric and bounded when K covers the vocabulary") {
    Rng rng(29);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t v = 2 + rng.next_below(12);
        const TokenDistribution a = random_dist(v, rng);
        const TokenDistribution b = random_dist(v, rng);
        const double ab = l1_penalty(a, b, v);
        const double ba = l1_penalty(b, a, v);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= 2.0);
        // Restricted support stays within the same bounds.
        const double partial = l1_penalty(a, b, 1 + rng.next_below(v));
        CHECK(partial >= 0.0);
        CHECK(partial <= 2.0);
    }
}

TEST_CASE("final reward composes base, penalty, and alpha") {
    // Judge over two tokens: history (0) decodes to [0.5, 0.5]; history (1)
    // decodes to [0.1, 0.9]. Trajectory [0] against context [1] with gold 0:
    // base 0.5, penalty |0.5-0.1| + |0.5-0.9| = 0.8, final 0.5 - 0.1*0.8.
    std::vector<TokenSequence> corpus;
    corpus.push_back({0, 0});
    corpus.push_back({0, 1});
    corpus.push_back({1, 0});
    for (int i = 0; i < 9; ++i) corpus.push_back({1, 1});
    const NGramModel judge = fit_ngram(corpus, 2, 1e-12, 2);

    Trajectory traj;
    traj.tokens = {0};
    traj.log_probs = {0.0};
    RewardConfig cfg;
    cfg.judge_temperature = 1.0;
    cfg.top_k = 100;
    cfg.alpha = 0.1;

    const RewardBreakdown out = final_reward(judge, traj, {1}, 0, 99, cfg);
    CHECK(out.base == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.penalty == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(out.final_reward == doctest::Approx(0.42).epsilon(1e-9));
    CHECK(out.gold_rank.has_value());

    // alpha = 0 switches the regularizer off entirely.
    cfg.alpha = 0.0;
    const RewardBreakdown unreg = final_reward(judge, traj, {1}, 0, 99, cfg);
    CHECK(unreg.final_reward == unreg.base);
}

TEST_CASE("replay bound: a trajectory equal to the context has zero penalty") {
    const NGramModel judge = fit_ngram({{0, 1, 2, 1}, {2, 0, 1, 0}}, 2, 0.1, 3);
    RewardConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        Rng rng(trial);
        const TokenSequence context = bowtest::random_context(3, 1 + rng.next_below(4), rng);
        Trajectory traj;
        traj.tokens = context;
        traj.log_probs.assign(context.size(), 0.0);
        const RewardBreakdown out = final_reward(judge, traj, context, rng.next_below(3), 99, cfg);
        CHECK(out.penalty == 0.0);
        CHECK(out.final_reward == out.base);
    }
}

TEST_CASE("final reward is monotone in the gold probability at fixed penalty") {
    // Same penalty support and values, increasing mass on gold.
    const TokenDistribution ref = dist_of({0.5, 0.5});
    RewardConfig cfg;
    double previous = -1.0;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const TokenDistribution tau = dist_of({p, 1.0 - p});
        auto [base, rank] = base_reward(tau, 0, 2);
        const double penalty = l1_penalty(tau, ref, 2);
        (void)rank;
        (void)penalty;
        // Hold the penalty fixed by composing manually with a constant one.
        const double final_value = base - cfg.alpha * 0.8;
        CHECK(final_value > previous);
        previous = final_value;
    }
}

TEST_CASE("judge_input strips only a trailing stop token") {
    Trajectory traj;
    traj.tokens = {4, 5, 1};
    traj.log_probs = {0, 0, 0};
    CHECK(judge_input(traj, 1) == TokenSequence{4, 5});

    Trajectory no_stop;
    no_stop.tokens = {4, 5};
    no_stop.log_probs = {0, 0};
    CHECK(judge_input(no_stop, 1) == TokenSequence{4, 5});

    Trajectory only_stop;
    only_stop.tokens = {1};
    only_stop.log_probs = {0};
    CHECK(judge_input(only_stop, 1) == TokenSequence{1});
}

TEST_CASE("score_group fills rewards for every member") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    Rng init(8);
    const LogLinearModel policy = bowtest::random_model(16, vocab.size(), 2, init);
    const NGramModel judge =
        fit_ngram({encode("a b c a", vocab), encode("c b a b", vocab)}, 2, 0.1, vocab.size());
    SamplingConfig cfg;
    cfg.stop_token = vocab.eos();
    RolloutGroup group = sample_group(policy, encode("a b", vocab), *vocab.find("c"), vocab, cfg, 1, 0);
    score_group(group, judge, vocab.eos(), RewardConfig{});
    CHECK(group.rewards.size() == group.trajectories.size());
    CHECK(group.breakdowns.size() == group.trajectories.size());
    for (std::size_t m = 0; m < group.rewards.size(); ++m) {
        CHECK(group.rewards[m] == group.breakdowns[m].final_reward);
        CHECK(group.breakdowns[m].base >= 0.0);
        CHECK(group.breakdowns[m].base <= 1.0);
        CHECK(group.breakdowns[m].penalty >= 0.0);
        CHECK(group.breakdowns[m].penalty <= 2.0);
        CHECK(group.rewards[m] >= group.breakdowns[m].base - 2.0 * RewardConfig{}.alpha);
    }
}

TEST_CASE("reward config defaults follow the pipeline settings") {
    const RewardConfig cfg;
    CHECK(cfg.judge_temperature == 5.0);
    CHECK(cfg.top_k == 100);
    CHECK(cfg.alpha == 0.1);
    CHECK_NOTHROW(cfg.validate());
    RewardConfig bad;
    bad.judge_temperature = 0.0;
    CHECK_THROWS_AS(bad.validate(), NonPositiveTemperatureError);
}
