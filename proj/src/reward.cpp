#include "bow/reward.hpp"

#include <algorithm>
#include <cmath>

#include "bow/errors.hpp"
#include "bow/model.hpp"

namespace bow {

void RewardConfig::validate() const {
    if (!(judge_temperature > 0.0)) throw NonPositiveTemperatureError(judge_temperature);
    if (top_k < 1) throw Error("top-K cutoff must be >= 1");
    if (alpha < 0.0) throw Error("alpha must be >= 0");
}

TokenDistribution judge_distribution(const NGramModel& judge, const TokenSequence& input,
                                     double judge_temperature) {
    if (input.empty()) throw Error("judge input must be non-empty");
    return next_token_distribution(judge, input, judge_temperature);
}

TokenSequence judge_input(const Trajectory& trajectory, TokenId stop_token) {
    TokenSequence input = trajectory.tokens;
    if (input.size() > 1 && input.back() == stop_token) input.pop_back();
    return input;
}

std::pair<double, std::size_t> base_reward(const TokenDistribution& dist, TokenId gold,
                                           std::size_t top_k) {
    if (gold >= dist.size()) throw GoldOutOfVocabularyError(gold);
    const std::size_t cutoff = std::min(top_k, dist.size());
    const std::vector<TokenId> ranked = ranked_tokens(dist);
    std::size_t rank = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i] == gold) {
            rank = i + 1;
            break;
        }
    }
    const double reward = rank <= cutoff ? dist[gold] : 0.0;
    return {reward, rank};
}

double l1_penalty(const TokenDistribution& dist_tau, const TokenDistribution& dist_ref,
                  std::size_t top_k) {
    if (dist_tau.size() != dist_ref.size()) {
        throw ShapeMismatchError(dist_ref.size(), dist_tau.size());
    }
    const std::size_t cutoff = std::min(top_k, dist_ref.size());
    const std::vector<TokenId> ranked = ranked_tokens(dist_ref);
    double total = 0.0;
    for (std::size_t i = 0; i < cutoff; ++i) {
        const TokenId w = ranked[i];
        total += std::abs(dist_tau[w] - dist_ref[w]);
    }
    return total;
}

RewardBreakdown final_reward(const NGramModel& judge, const Trajectory& trajectory,
                             const TokenSequence& context, TokenId gold, TokenId stop_token,
                             const RewardConfig& cfg) {
    cfg.validate();
    const TokenDistribution dist_tau =
        judge_distribution(judge, judge_input(trajectory, stop_token), cfg.judge_temperature);
    const TokenDistribution dist_ref = judge_distribution(judge, context, cfg.judge_temperature);

    RewardBreakdown out;
    auto [base, rank] = base_reward(dist_tau, gold, cfg.top_k);
    out.base = base;
    out.gold_rank = rank;
    out.penalty = l1_penalty(dist_tau, dist_ref, cfg.top_k);
    out.final_reward = out.base - cfg.alpha * out.penalty;
    return out;
}

void score_group(RolloutGroup& group, const NGramModel& judge, TokenId stop_token,
                 const RewardConfig& cfg) {
    group.breakdowns.clear();
    group.rewards.clear();
    group.breakdowns.reserve(group.trajectories.size());
    group.rewards.reserve(group.trajectories.size());
    for (const Trajectory& traj : group.trajectories) {
        RewardBreakdown breakdown =
            final_reward(judge, traj, group.context, group.gold_word, stop_token, cfg);
        group.rewards.push_back(breakdown.final_reward);
        group.breakdowns.push_back(breakdown);
    }
}

}  // namespace bow
