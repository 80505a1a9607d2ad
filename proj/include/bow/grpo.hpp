#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bow/loglinear.hpp"
#include "bow/ngram.hpp"
#include "bow/pair_types.hpp"
#include "bow/reward.hpp"
#include "bow/rollout.hpp"

namespace bow {

struct TrainConfig {
    double learning_rate = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 1e-2;
    double clip_epsilon = 0.2;
    std::size_t total_batch = 64;
    std::size_t mini_batch = 16;
    std::size_t group_size = 5;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    double sigma_floor = 1e-8;
    double entropy_coef = 0.0;  // optional entropy bonus; 0 keeps the objective pure surrogate

    void validate() const;
};

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t step = 0;

    explicit OptimizerState(std::size_t size = 0)
        : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

struct StepMetrics {
    std::size_t step = 0;
    double mean_reward = 0.0;
    double mean_base = 0.0;
    double mean_penalty = 0.0;
    double mean_abs_advantage = 0.0;
    double clipped_fraction = 0.0;
    double grad_norm = 0.0;
    double entropy = 0.0;
};

// The training objective has exactly these two components; there is no KL
// term anywhere in the loop.
struct LossTerms {
    double surrogate_term = 0.0;  // -mean clipped surrogate
    double entropy_term = 0.0;    // -entropy_coef * mean entropy; 0 by default

    double total() const { return surrogate_term + entropy_term; }
};

struct SurrogateEval {
    LossTerms loss;
    std::vector<double> grad;
    double clipped_fraction = 0.0;
    double mean_entropy = 0.0;
};

// Group-normalized advantages: (r_i - mean) / population std. Degenerate
// groups (std below the floor) yield all-zero advantages. Requires >= 2
// rewards.
std::vector<double> compute_advantages(const std::vector<double>& rewards, double sigma_floor);

// PPO-style per-trajectory objective min(rho * A, clip(rho, 1-eps, 1+eps) * A)
// with rho = exp(new_logp - old_logp). This is the value being maximized.
double clipped_surrogate(double old_log_prob, double new_log_prob, double advantage, double eps);

// One AdamW update, minimizing: bias-corrected moments on the gradient, with
// weight decay applied directly to the weights (decoupled from the gradient).
void optimizer_step(LogLinearModel& model, OptimizerState& state,
                    const std::vector<double>& gradient, const TrainConfig& cfg);

// Loss and analytic gradient of the clipped-surrogate objective over a
// mini-batch of scored groups, as a pure function of the current policy.
// Kept separate from the epoch loop so finite differences can probe it.
SurrogateEval surrogate_loss(const LogLinearModel& policy,
                             const std::vector<const RolloutGroup*>& mini_batch,
                             const Vocabulary& vocab, const SamplingConfig& sampling,
                             const TrainConfig& cfg);

// Fills group.rewards and breakdowns. The default scorer is the judge-based
// reward; the no-judge baseline substitutes its hard reward here.
using GroupScorer = std::function<void(RolloutGroup&)>;

GroupScorer make_judge_scorer(const NGramModel& judge, TokenId stop_token,
                              const RewardConfig& reward_cfg);

// One pass over the pairs: per total-batch, roll out groups with the current
// (old) policy, score and normalize them, then take one clipped-surrogate
// AdamW step per mini-batch. Returns one StepMetrics per mini-batch step.
// epoch_index offsets the rng streams and the global step counter; on_step,
// when set, fires after each optimizer step (checkpoint cadence hangs off it).
using StepHook = std::function<void(const StepMetrics&)>;

std::vector<StepMetrics> train_epoch(LogLinearModel& policy, OptimizerState& state,
                                     const std::vector<ContextTargetPair>& pairs,
                                     const Vocabulary& vocab, const GroupScorer& scorer,
                                     const TrainConfig& cfg, const SamplingConfig& sampling,
                                     std::size_t epoch_index, const StepHook& on_step = {});

// Epoch loop plus optional periodic checkpointing (0 disables). Metrics from
// all epochs are concatenated with a continuous step counter.
std::vector<StepMetrics> train_run(LogLinearModel& policy,
                                   const std::vector<ContextTargetPair>& pairs,
                                   const Vocabulary& vocab, const GroupScorer& scorer,
                                   const TrainConfig& cfg, const SamplingConfig& sampling,
                                   std::size_t checkpoint_every = 0,
                                   const std::string& checkpoint_path = "");

}  // namespace bow
