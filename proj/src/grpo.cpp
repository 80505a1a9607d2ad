#include "bow/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "bow/errors.hpp"
#include "bow/model.hpp"

namespace bow {

namespace {
constexpr double kAdamEpsilon = 1e-8;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error("beta2 must lie in (0, 1)");
    if (weight_decay < 0.0) throw Error("weight decay must be >= 0");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw Error("clip epsilon must lie in (0, 1)");
    if (total_batch == 0 || mini_batch == 0) throw Error("batch sizes must be >= 1");
    if (total_batch % mini_batch != 0) throw Error("mini-batch must divide the total batch");
    if (group_size < 2) throw Error("group size must be >= 2");
    if (epochs == 0) throw Error("epochs must be >= 1");
    if (!(sigma_floor > 0.0)) throw Error("sigma floor must be > 0");
}

std::vector<double> compute_advantages(const std::vector<double>& rewards, double sigma_floor) {
    if (rewards.size() < 2) throw GroupTooSmallError(rewards.size());
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sigma = std::sqrt(var / n);
    std::vector<double> advantages(rewards.size(), 0.0);
    if (sigma < sigma_floor) return advantages;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        advantages[i] = (rewards[i] - mean) / sigma;
    }
    return advantages;
}

double clipped_surrogate(double old_log_prob, double new_log_prob, double advantage, double eps) {
    const double ratio = std::exp(new_log_prob - old_log_prob);
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

void optimizer_step(LogLinearModel& model, OptimizerState& state,
                    const std::vector<double>& gradient, const TrainConfig& cfg) {
    auto& weights = model.mutable_weights();
    if (gradient.size() != weights.size()) throw ShapeMismatchError(weights.size(), gradient.size());
    if (state.first_moment.size() != weights.size()) {
        throw ShapeMismatchError(weights.size(), state.first_moment.size());
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double g = gradient[i];
        state.first_moment[i] = cfg.beta1 * state.first_moment[i] + (1.0 - cfg.beta1) * g;
        state.second_moment[i] = cfg.beta2 * state.second_moment[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = state.first_moment[i] / bias1;
        const double v_hat = state.second_moment[i] / bias2;
        weights[i] -=
            cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + kAdamEpsilon) +
                                 cfg.weight_decay * weights[i]);
    }
}

namespace {

SurrogateEval eval_surrogate(const LogLinearModel& policy,
                             const std::vector<const RolloutGroup*>& mini_batch,
                             const Vocabulary& vocab, const SamplingConfig& sampling,
                             const TrainConfig& cfg, bool want_grad) {
    SurrogateEval eval;
    if (want_grad) eval.grad.assign(policy.weights().size(), 0.0);

    std::size_t members = 0;
    std::size_t positions = 0;
    std::size_t clipped = 0;
    double surrogate_sum = 0.0;
    double entropy_sum = 0.0;

    struct PositionGrad {
        TokenSequence prefix;
        TokenId token;
    };

    for (const RolloutGroup* group : mini_batch) {
        if (group->advantages.size() != group->trajectories.size()) {
            throw ShapeMismatchError(group->trajectories.size(), group->advantages.size());
        }
        const TokenSequence prompt = assemble_rollout_prompt(group->context, vocab);
        for (std::size_t m = 0; m < group->trajectories.size(); ++m) {
            const Trajectory& traj = group->trajectories[m];
            const double advantage = group->advantages[m];
            const double old_logp = traj.total_log_prob();

            // Walk the trajectory once, collecting the new log-prob and the
            // per-position conditioning prefixes.
            double new_logp = 0.0;
            std::vector<PositionGrad> steps;
            steps.reserve(traj.tokens.size());
            TokenSequence prefix = prompt;
            for (TokenId token : traj.tokens) {
                const TokenDistribution dist =
                    next_token_distribution(policy, prefix, sampling.temperature);
                new_logp += std::log(dist[token]);
                entropy_sum += entropy(dist);
                if (want_grad) steps.push_back({prefix, token});
                prefix.push_back(token);
                ++positions;
            }

            const double ratio = std::exp(new_logp - old_logp);
            surrogate_sum += clipped_surrogate(old_logp, new_logp, advantage, cfg.clip_epsilon);
            const bool out_of_band = std::abs(ratio - 1.0) > cfg.clip_epsilon;
            if (out_of_band) ++clipped;
            ++members;

            if (want_grad) {
                // The clipped branch is constant in theta, so its gradient is
                // zero; otherwise d/dtheta ratio*A = ratio*A*grad(new_logp).
                const double unclipped = ratio * advantage;
                const double clipped_value =
                    std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * advantage;
                if (unclipped <= clipped_value) {
                    const double scale = ratio * advantage;
                    for (const PositionGrad& s : steps) {
                        policy.accumulate_grad_log_prob(s.prefix, s.token, sampling.temperature,
                                                        scale, eval.grad);
                    }
                }
            }
        }
    }

    if (members == 0) throw Error("empty mini-batch");
    const double inv_members = 1.0 / static_cast<double>(members);
    eval.loss.surrogate_term = -surrogate_sum * inv_members;
    eval.mean_entropy = positions > 0 ? entropy_sum / static_cast<double>(positions) : 0.0;
    eval.loss.entropy_term = -cfg.entropy_coef * eval.mean_entropy;
    eval.clipped_fraction = static_cast<double>(clipped) * inv_members;

    if (want_grad) {
        // So far grad holds d(sum surrogate); flip sign and average.
        for (double& g : eval.grad) g *= -inv_members;
        if (cfg.entropy_coef != 0.0 && positions > 0) {
            // d entropy / d score_v = -pi_v (log pi_v + H); chain through the
            // active features and the temperature division.
            std::vector<double> ent_grad(policy.weights().size(), 0.0);
            for (const RolloutGroup* group : mini_batch) {
                TokenSequence prefix = assemble_rollout_prompt(group->context, vocab);
                for (const Trajectory& traj : group->trajectories) {
                    TokenSequence p = prefix;
                    for (TokenId token : traj.tokens) {
                        const TokenDistribution dist =
                            next_token_distribution(policy, p, sampling.temperature);
                        const double h = entropy(dist);
                        for (std::size_t f : policy.active_features(p)) {
                            double* row = ent_grad.data() + f * policy.vocab_size();
                            for (std::size_t w = 0; w < policy.vocab_size(); ++w) {
                                const double pw = dist.probs[w];
                                if (pw > 0.0) {
                                    row[w] += -pw * (std::log(pw) + h) / sampling.temperature;
                                }
                            }
                        }
                        p.push_back(token);
                    }
                }
            }
            const double ent_scale = -cfg.entropy_coef / static_cast<double>(positions);
            for (std::size_t i = 0; i < eval.grad.size(); ++i) {
                eval.grad[i] += ent_scale * ent_grad[i];
            }
        }
    }

    if (!std::isfinite(eval.loss.total())) {
        throw NonFiniteLossError("surrogate=" + std::to_string(eval.loss.surrogate_term) +
                                 " entropy=" + std::to_string(eval.loss.entropy_term));
    }
    return eval;
}

}  // namespace

SurrogateEval surrogate_loss(const LogLinearModel& policy,
                             const std::vector<const RolloutGroup*>& mini_batch,
                             const Vocabulary& vocab, const SamplingConfig& sampling,
                             const TrainConfig& cfg) {
    return eval_surrogate(policy, mini_batch, vocab, sampling, cfg, true);
}

GroupScorer make_judge_scorer(const NGramModel& judge, TokenId stop_token,
                              const RewardConfig& reward_cfg) {
    return [&judge, stop_token, reward_cfg](RolloutGroup& group) {
        score_group(group, judge, stop_token, reward_cfg);
    };
}

std::vector<StepMetrics> train_epoch(LogLinearModel& policy, OptimizerState& state,
                                     const std::vector<ContextTargetPair>& pairs,
                                     const Vocabulary& vocab, const GroupScorer& scorer,
                                     const TrainConfig& cfg, const SamplingConfig& sampling,
                                     std::size_t epoch_index, const StepHook& on_step) {
    cfg.validate();
    sampling.validate();
    if (pairs.empty()) throw Error("no training pairs");
    if (cfg.group_size != sampling.group_size) {
        throw ShapeMismatchError(cfg.group_size, sampling.group_size);
    }

    std::vector<StepMetrics> metrics;
    for (std::size_t batch_start = 0; batch_start < pairs.size(); batch_start += cfg.total_batch) {
        const std::size_t batch_end = std::min(batch_start + cfg.total_batch, pairs.size());

        // Rollout and reward phase under the pre-update policy. Streams are
        // derived per (seed, context index, member), so any scheduling of
        // this loop yields the same groups.
        std::vector<RolloutGroup> groups;
        groups.reserve(batch_end - batch_start);
        for (std::size_t i = batch_start; i < batch_end; ++i) {
            const std::uint64_t context_index =
                static_cast<std::uint64_t>(epoch_index) * pairs.size() + i;
            RolloutGroup group = sample_group(policy, pairs[i].context, pairs[i].gold, vocab,
                                              sampling, cfg.seed, context_index);
            scorer(group);
            if (group.rewards.size() != group.trajectories.size()) {
                throw ShapeMismatchError(group.trajectories.size(), group.rewards.size());
            }
            double mean = 0.0;
            for (double r : group.rewards) mean += r;
            mean /= static_cast<double>(group.rewards.size());
            double var = 0.0;
            for (double r : group.rewards) var += (r - mean) * (r - mean);
            group.reward_mean = mean;
            group.reward_std = std::sqrt(var / static_cast<double>(group.rewards.size()));
            group.advantages = compute_advantages(group.rewards, cfg.sigma_floor);
            groups.push_back(std::move(group));
        }

        // Update phase: one clipped-surrogate AdamW step per mini-batch.
        for (std::size_t mb_start = 0; mb_start < groups.size(); mb_start += cfg.mini_batch) {
            const std::size_t mb_end = std::min(mb_start + cfg.mini_batch, groups.size());
            std::vector<const RolloutGroup*> mini_batch;
            mini_batch.reserve(mb_end - mb_start);
            for (std::size_t i = mb_start; i < mb_end; ++i) mini_batch.push_back(&groups[i]);

            const SurrogateEval eval = surrogate_loss(policy, mini_batch, vocab, sampling, cfg);
            optimizer_step(policy, state, eval.grad, cfg);

            StepMetrics step;
            step.step = state.step;
            double reward_sum = 0.0;
            double base_sum = 0.0;
            double penalty_sum = 0.0;
            double abs_adv_sum = 0.0;
            std::size_t count = 0;
            for (const RolloutGroup* g : mini_batch) {
                for (std::size_t m = 0; m < g->rewards.size(); ++m) {
                    reward_sum += g->rewards[m];
                    abs_adv_sum += std::abs(g->advantages[m]);
                    if (m < g->breakdowns.size()) {
                        base_sum += g->breakdowns[m].base;
                        penalty_sum += g->breakdowns[m].penalty;
                    }
                    ++count;
                }
            }
            const double inv = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
            step.mean_reward = reward_sum * inv;
            step.mean_base = base_sum * inv;
            step.mean_penalty = penalty_sum * inv;
            step.mean_abs_advantage = abs_adv_sum * inv;
            step.clipped_fraction = eval.clipped_fraction;
            double norm = 0.0;
            for (double g : eval.grad) norm += g * g;
            step.grad_norm = std::sqrt(norm);
            step.entropy = eval.mean_entropy;
            metrics.push_back(step);
            if (on_step) on_step(step);
        }
    }
    return metrics;
}

std::vector<StepMetrics> train_run(LogLinearModel& policy,
                                   const std::vector<ContextTargetPair>& pairs,
                                   const Vocabulary& vocab, const GroupScorer& scorer,
                                   const TrainConfig& cfg, const SamplingConfig& sampling,
                                   std::size_t checkpoint_every, const std::string& checkpoint_path) {
    cfg.validate();
    OptimizerState state(policy.weights().size());
    std::vector<StepMetrics> all;
    std::size_t last_checkpoint = 0;
    const StepHook checkpoint_hook = [&](const StepMetrics& m) {
        if (checkpoint_every > 0 && !checkpoint_path.empty() &&
            m.step - last_checkpoint >= checkpoint_every) {
            save_checkpoint(policy, checkpoint_path);
            last_checkpoint = m.step;
        }
    };
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<StepMetrics> epoch_metrics =
            train_epoch(policy, state, pairs, vocab, scorer, cfg, sampling, epoch, checkpoint_hook);
        all.insert(all.end(), epoch_metrics.begin(), epoch_metrics.end());
    }
    if (!checkpoint_path.empty()) save_checkpoint(policy, checkpoint_path);
    return all;
}

}  // namespace bow
