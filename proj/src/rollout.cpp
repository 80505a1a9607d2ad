#include "bow/rollout.hpp"

#include <numeric>

#include "bow/errors.hpp"
#include "bow/model.hpp"

namespace bow {

void SamplingConfig::validate() const {
    if (group_size < 2) throw Error("group size must be >= 2");
    if (max_trajectory_length < 1) throw Error("max trajectory length must be >= 1");
    if (!(temperature > 0.0)) throw NonPositiveTemperatureError(temperature);
}

double Trajectory::total_log_prob() const {
    return std::accumulate(log_probs.begin(), log_probs.end(), 0.0);
}

TokenSequence assemble_rollout_prompt(const TokenSequence& context, const Vocabulary& vocab) {
    TokenSequence prompt = context;
    prompt.push_back(vocab.reason_start());
    return prompt;
}

Trajectory sample_trajectory(const LogLinearModel& policy, const TokenSequence& context,
                             const Vocabulary& vocab, const SamplingConfig& cfg, Rng& rng) {
    cfg.validate();
    if (context.empty()) throw Error("rollout context must be non-empty");

    TokenSequence prefix = assemble_rollout_prompt(context, vocab);
    Trajectory traj;
    while (traj.tokens.size() < cfg.max_trajectory_length) {
        const TokenDistribution dist = next_token_distribution(policy, prefix, cfg.temperature);
        const double u = rng.next_double();
        double cum = 0.0;
        TokenId token = dist.size() - 1;
        for (TokenId id = 0; id < dist.size(); ++id) {
            cum += dist[id];
            if (u < cum) {
                token = id;
                break;
            }
        }
        traj.tokens.push_back(token);
        traj.log_probs.push_back(std::log(dist[token]));
        prefix.push_back(token);
        if (token == cfg.stop_token) break;
    }
    return traj;
}

RolloutGroup sample_group(const LogLinearModel& policy, const TokenSequence& context,
                          TokenId gold_word, const Vocabulary& vocab, const SamplingConfig& cfg,
                          std::uint64_t seed, std::uint64_t context_index) {
    cfg.validate();
    RolloutGroup group;
    group.context = context;
    group.gold_word = gold_word;
    group.trajectories.reserve(cfg.group_size);
    for (std::size_t member = 0; member < cfg.group_size; ++member) {
        Rng rng = derive_rng(seed, context_index, member);
        group.trajectories.push_back(sample_trajectory(policy, context, vocab, cfg, rng));
    }
    return group;
}

}  // namespace bow
