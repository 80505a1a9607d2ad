#pragma once

#include <vector>

#include "bow/loglinear.hpp"
#include "bow/reward_types.hpp"
#include "bow/rng.hpp"
#include "bow/vocab.hpp"

namespace bow {

struct SamplingConfig {
    std::size_t group_size = 5;
    std::size_t max_trajectory_length = 16;
    double temperature = 1.0;
    TokenId stop_token = 0;

    void validate() const;
};

// A policy-emitted reasoning path together with the log-probs it was sampled
// at. The log-probs are kept so later update steps can form importance
// ratios against the generating policy without re-running it.
struct Trajectory {
    TokenSequence tokens;
    std::vector<double> log_probs;

    double total_log_prob() const;
};

// One context's unit of work: N trajectories plus, once filled in by the
// reward and optimizer stages, rewards and group-normalized advantages.
struct RolloutGroup {
    TokenSequence context;
    TokenId gold_word = 0;  // held for reward computation only, never prompted
    std::vector<Trajectory> trajectories;
    std::vector<RewardBreakdown> breakdowns;
    std::vector<double> rewards;
    double reward_mean = 0.0;
    double reward_std = 0.0;
    std::vector<double> advantages;
};

// The conditioning prefix for generation: context tokens plus the
// reason-start marker. This is the only prompt assembly path in the module
// and it never receives the gold word, so the bottleneck holds by
// construction.
TokenSequence assemble_rollout_prompt(const TokenSequence& context, const Vocabulary& vocab);

// Autoregressive sampling at cfg.temperature until the stop token or the
// length cap. Per-token log-probs are recorded from the sampling
// distributions themselves.
Trajectory sample_trajectory(const LogLinearModel& policy, const TokenSequence& context,
                             const Vocabulary& vocab, const SamplingConfig& cfg, Rng& rng);

// N independent trajectories for one context. Member m uses the rng stream
// derived from (seed, context_index, m), so results do not depend on
// scheduling order. Rewards and advantages are left empty for later stages.
RolloutGroup sample_group(const LogLinearModel& policy, const TokenSequence& context,
                          TokenId gold_word, const Vocabulary& vocab, const SamplingConfig& cfg,
                          std::uint64_t seed, std::uint64_t context_index);

}  // namespace bow
