#pragma once

#include <utility>

#include "bow/distribution.hpp"
#include "bow/ngram.hpp"
#include "bow/reward_types.hpp"
#include "bow/rollout.hpp"
#include "bow/vocab.hpp"

namespace bow {

// The judge's next-token distribution for an input sequence at temperature
// T_J. Feeding the trajectory yields P(w | tau); feeding the raw context
// yields the reference distribution P(w | C). Same operation, same judge.
TokenDistribution judge_distribution(const NGramModel& judge, const TokenSequence& input,
                                     double judge_temperature);

// The portion of a trajectory the judge actually reads: the trailing stop
// token is generation structure, not reasoning content, so it is removed.
// A trajectory that is nothing but the stop token is passed through as-is
// to keep the judge input non-empty.
TokenSequence judge_input(const Trajectory& trajectory, TokenId stop_token);

// Probability of the gold token if it ranks within the top min(K, |V|)
// entries of the distribution (ties at the boundary break toward lower token
// ids), else 0. Also reports the 1-based rank.
std::pair<double, std::size_t> base_reward(const TokenDistribution& dist, TokenId gold,
                                           std::size_t top_k);

// Sum of |dist_tau[w] - dist_ref[w]| over the top min(K, |V|) tokens of the
// reference distribution. Raw probabilities, no renormalization over the
// support; the result lies in [0, 2].
double l1_penalty(const TokenDistribution& dist_tau, const TokenDistribution& dist_ref,
                  std::size_t top_k);

// Full reward for one trajectory: base from the trajectory-conditioned judge
// distribution, penalty against the context-conditioned reference, final =
// base - alpha * penalty. Both distributions use cfg.judge_temperature.
RewardBreakdown final_reward(const NGramModel& judge, const Trajectory& trajectory,
                             const TokenSequence& context, TokenId gold, TokenId stop_token,
                             const RewardConfig& cfg);

// Fills group.rewards (and breakdowns) from final_reward per member.
void score_group(RolloutGroup& group, const NGramModel& judge, TokenId stop_token,
                 const RewardConfig& cfg);

}  // namespace bow
