#pragma once

#include <string>
#include <vector>

#include "bow/eval_types.hpp"
#include "bow/grpo.hpp"
#include "bow/loglinear.hpp"
#include "bow/ngram.hpp"
#include "bow/pair_types.hpp"
#include "bow/vocab.hpp"

namespace bow {

// Judge probability of each candidate given the reasoning trajectory: the
// full judge distribution restricted to the candidate set, unnormalized. The
// sample's vote is the argmax (ties toward the lowest index).
std::vector<double> score_candidates(const NGramModel& judge, const Trajectory& trajectory,
                                     const std::vector<TokenId>& candidates, TokenId stop_token,
                                     double eval_temperature = 1.0);

// Samples `samples` trajectories at the given temperature, votes each via
// score_candidates, and majority-votes the final prediction. Sample s draws
// from the stream (seed, s), so the outcome is seed-deterministic.
EvalOutcome self_consistency_predict(const LogLinearModel& policy, const NGramModel& judge,
                                     const EvalInstance& instance, const Vocabulary& vocab,
                                     std::size_t samples, double temperature, std::uint64_t seed,
                                     std::size_t max_trajectory_length = 16,
                                     double eval_judge_temperature = 1.0);

// No-judge prediction: each sampled trajectory is truncated at its first
// box-open marker (kept inclusive; a missing marker keeps the whole
// trajectory), and candidates are scored as continuations of the retained
// prefix under the policy itself.
EvalOutcome no_judge_predict(const LogLinearModel& policy, const EvalInstance& instance,
                             const Vocabulary& vocab, std::size_t samples, double temperature,
                             std::uint64_t seed, std::size_t max_trajectory_length = 16);

// Hard reward of the no-judge baseline: 1 iff the first token after the
// box-open marker is the gold word, else 0 (including when no marker was
// emitted).
double no_judge_reward(const Trajectory& trajectory, TokenId gold, const Vocabulary& vocab);

// Selective-language-modeling loss: mean negative log-likelihood of gold
// given context over the kept pairs only, with its analytic gradient.
// `touched` records which input indices contributed, so callers can assert
// the selection mask did its job.
struct SlmEval {
    double loss = 0.0;
    std::vector<double> grad;
    std::vector<std::size_t> touched;
};

SlmEval slm_loss(const LogLinearModel& model, const std::vector<ContextTargetPair>& pairs);

// AdamW training on the selective loss, one step per mini-batch chunk of the
// kept pairs per epoch. Returns per-step losses and the union of touched
// input indices.
struct SlmTrainResult {
    std::vector<double> losses;
    std::vector<std::size_t> touched;
};

SlmTrainResult train_slm(LogLinearModel& policy, const std::vector<ContextTargetPair>& pairs,
                         const TrainConfig& cfg);

// Batch evaluation over an instance file, one results record per instance
// plus a summary with accuracy and a seeded 1,000-resample bootstrap 95%
// interval. Pass judge = nullptr for no-judge mode; it is never touched then.
struct EvalSummary {
    double accuracy = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t instances = 0;
};

EvalSummary run_evaluation(const LogLinearModel& policy, const NGramModel* judge,
                           const std::vector<EvalInstance>& instances, const Vocabulary& vocab,
                           bool no_judge_mode, std::size_t samples, double temperature,
                           std::uint64_t seed, std::size_t max_trajectory_length,
                           double eval_judge_temperature, const std::string& results_path,
                           const std::string& header = "");

}  // namespace bow
