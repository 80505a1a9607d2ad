#include "bow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "bow/errors.hpp"
#include "bow/model.hpp"
#include "bow/reward.hpp"
#include "bow/rng.hpp"
#include "bow/rollout.hpp"

namespace bow {

using nlohmann::json;

void EvalInstance::validate() const {
    if (candidates.size() < 2) throw Error("eval instance needs at least 2 candidates");
    if (gold_index >= candidates.size()) throw Error("gold index outside candidate list");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (std::size_t j = i + 1; j < candidates.size(); ++j) {
            if (candidates[i] == candidates[j]) throw Error("duplicate eval candidates");
        }
    }
}

std::size_t majority_vote(const std::vector<std::size_t>& votes, std::size_t num_candidates) {
    std::vector<std::size_t> tally(num_candidates, 0);
    for (std::size_t v : votes) {
        if (v >= num_candidates) throw Error("vote outside candidate range");
        ++tally[v];
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < num_candidates; ++i) {
        if (tally[i] > tally[best]) best = i;  // ties keep the lower index
    }
    return best;
}

std::vector<double> score_candidates(const NGramModel& judge, const Trajectory& trajectory,
                                     const std::vector<TokenId>& candidates, TokenId stop_token,
                                     double eval_temperature) {
    if (trajectory.tokens.empty()) throw Error("trajectory must be non-empty");
    const TokenDistribution dist =
        judge_distribution(judge, judge_input(trajectory, stop_token), eval_temperature);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (TokenId candidate : candidates) {
        if (candidate >= dist.size()) throw CandidateOutOfVocabularyError(candidate);
        scores.push_back(dist[candidate]);
    }
    return scores;
}

namespace {

std::size_t argmax_vote(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

SamplingConfig eval_sampling(const Vocabulary& vocab, double temperature, std::size_t max_len) {
    SamplingConfig cfg;
    cfg.group_size = 2;  // unused by single-trajectory sampling
    cfg.max_trajectory_length = max_len;
    cfg.temperature = temperature;
    cfg.stop_token = vocab.eos();
    return cfg;
}

}  // namespace

EvalOutcome self_consistency_predict(const LogLinearModel& policy, const NGramModel& judge,
                                     const EvalInstance& instance, const Vocabulary& vocab,
                                     std::size_t samples, double temperature, std::uint64_t seed,
                                     std::size_t max_trajectory_length,
                                     double eval_judge_temperature) {
    if (samples < 1) throw Error("need at least one sample");
    instance.validate();
    const SamplingConfig cfg = eval_sampling(vocab, temperature, max_trajectory_length);
    EvalOutcome outcome;
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = derive_rng(seed, 0x5e1f, s);
        const Trajectory traj = sample_trajectory(policy, instance.context, vocab, cfg, rng);
        const std::vector<double> scores =
            score_candidates(judge, traj, instance.candidates, cfg.stop_token,
                             eval_judge_temperature);
        outcome.votes.push_back(argmax_vote(scores));
    }
    outcome.prediction = majority_vote(outcome.votes, instance.candidates.size());
    outcome.correct = outcome.prediction == instance.gold_index;
    return outcome;
}

namespace {

// Prefix up to and including the first box-open marker; the whole trajectory
// when the marker is absent (or the vocabulary has none).
TokenSequence boxed_prefix(const Trajectory& trajectory, const Vocabulary& vocab) {
    const auto box = vocab.box_open();
    if (box) {
        for (std::size_t i = 0; i < trajectory.tokens.size(); ++i) {
            if (trajectory.tokens[i] == *box) {
                return TokenSequence(trajectory.tokens.begin(),
                                     trajectory.tokens.begin() + static_cast<std::ptrdiff_t>(i + 1));
            }
        }
    }
    return trajectory.tokens;
}

}  // namespace

EvalOutcome no_judge_predict(const LogLinearModel& policy, const EvalInstance& instance,
                             const Vocabulary& vocab, std::size_t samples, double temperature,
                             std::uint64_t seed, std::size_t max_trajectory_length) {
    if (samples < 1) throw Error("need at least one sample");
    instance.validate();
    const SamplingConfig cfg = eval_sampling(vocab, temperature, max_trajectory_length);
    const TokenSequence prompt = assemble_rollout_prompt(instance.context, vocab);
    EvalOutcome outcome;
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = derive_rng(seed, 0x9d3a, s);
        const Trajectory traj = sample_trajectory(policy, instance.context, vocab, cfg, rng);
        TokenSequence conditioning = prompt;
        const TokenSequence prefix = boxed_prefix(traj, vocab);
        conditioning.insert(conditioning.end(), prefix.begin(), prefix.end());
        std::vector<double> scores;
        scores.reserve(instance.candidates.size());
        for (TokenId candidate : instance.candidates) {
            if (candidate >= policy.vocab_size()) throw CandidateOutOfVocabularyError(candidate);
            scores.push_back(sequence_log_prob(policy, conditioning, {candidate}, 1.0));
        }
        outcome.votes.push_back(argmax_vote(scores));
    }
    outcome.prediction = majority_vote(outcome.votes, instance.candidates.size());
    outcome.correct = outcome.prediction == instance.gold_index;
    return outcome;
}

double no_judge_reward(const Trajectory& trajectory, TokenId gold, const Vocabulary& vocab) {
    const auto box = vocab.box_open();
    if (!box) return 0.0;
    for (std::size_t i = 0; i + 1 < trajectory.tokens.size(); ++i) {
        if (trajectory.tokens[i] == *box) {
            return trajectory.tokens[i + 1] == gold ? 1.0 : 0.0;
        }
    }
    return 0.0;
}

SlmEval slm_loss(const LogLinearModel& model, const std::vector<ContextTargetPair>& pairs) {
    SlmEval eval;
    eval.grad.assign(model.weights().size(), 0.0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].verdict == Verdict::kKept) eval.touched.push_back(i);
    }
    if (eval.touched.empty()) throw EmptySelectionError();
    const double inv = 1.0 / static_cast<double>(eval.touched.size());
    for (std::size_t index : eval.touched) {
        const ContextTargetPair& pair = pairs[index];
        const TokenDistribution dist = next_token_distribution(model, pair.context, 1.0);
        eval.loss -= std::log(dist[pair.gold]) * inv;
        model.accumulate_grad_log_prob(pair.context, pair.gold, 1.0, -inv, eval.grad);
    }
    return eval;
}

SlmTrainResult train_slm(LogLinearModel& policy, const std::vector<ContextTargetPair>& pairs,
                         const TrainConfig& cfg) {
    cfg.validate();
    std::vector<ContextTargetPair> kept;
    std::vector<std::size_t> kept_indices;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].verdict == Verdict::kKept) {
            kept.push_back(pairs[i]);
            kept_indices.push_back(i);
        }
    }
    if (kept.empty()) throw EmptySelectionError();

    SlmTrainResult result;
    result.touched = kept_indices;
    OptimizerState state(policy.weights().size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t start = 0; start < kept.size(); start += cfg.mini_batch) {
            const std::size_t end = std::min(start + cfg.mini_batch, kept.size());
            const std::vector<ContextTargetPair> chunk(kept.begin() + start, kept.begin() + end);
            const SlmEval eval = slm_loss(policy, chunk);
            if (!std::isfinite(eval.loss)) throw NonFiniteLossError("slm loss");
            optimizer_step(policy, state, eval.grad, cfg);
            result.losses.push_back(eval.loss);
        }
    }
    return result;
}

EvalSummary run_evaluation(const LogLinearModel& policy, const NGramModel* judge,
                           const std::vector<EvalInstance>& instances, const Vocabulary& vocab,
                           bool no_judge_mode, std::size_t samples, double temperature,
                           std::uint64_t seed, std::size_t max_trajectory_length,
                           double eval_judge_temperature, const std::string& results_path,
                           const std::string& header) {
    if (!no_judge_mode && judge == nullptr) throw Error("judge required unless in no-judge mode");
    std::ofstream out;
    if (!results_path.empty()) {
        out.open(results_path);
        if (!out) throw UnreadablePathError(results_path);
        if (!header.empty()) out << header << '\n';
    }

    std::vector<bool> correct;
    correct.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const std::uint64_t instance_seed = derive_rng(seed, 0x1457, i).next_u64();
        const EvalOutcome outcome =
            no_judge_mode
                ? no_judge_predict(policy, instances[i], vocab, samples, temperature,
                                   instance_seed, max_trajectory_length)
                : self_consistency_predict(policy, *judge, instances[i], vocab, samples,
                                           temperature, instance_seed, max_trajectory_length,
                                           eval_judge_temperature);
        correct.push_back(outcome.correct);
        if (out.is_open()) {
            out << json{{"instance_id", i},
                        {"votes", outcome.votes},
                        {"prediction", outcome.prediction},
                        {"correct", outcome.correct}}
                       .dump()
                << '\n';
        }
    }

    EvalSummary summary;
    summary.instances = instances.size();
    if (!instances.empty()) {
        std::size_t hits = 0;
        for (bool c : correct) hits += c ? 1 : 0;
        summary.accuracy = static_cast<double>(hits) / static_cast<double>(instances.size());

        // Seeded bootstrap over instance correctness, 1,000 resamples,
        // nearest-rank 2.5% / 97.5% percentiles.
        constexpr std::size_t kResamples = 1000;
        Rng rng = derive_rng(seed, 0xb007);
        std::vector<double> accs(kResamples, 0.0);
        for (std::size_t r = 0; r < kResamples; ++r) {
            std::size_t sum = 0;
            for (std::size_t i = 0; i < correct.size(); ++i) {
                sum += correct[rng.next_below(correct.size())] ? 1 : 0;
            }
            accs[r] = static_cast<double>(sum) / static_cast<double>(correct.size());
        }
        std::sort(accs.begin(), accs.end());
        summary.ci_low = accs[24];
        summary.ci_high = accs[974];
    }

    if (out.is_open()) {
        out << json{{"summary", true},
                    {"accuracy", summary.accuracy},
                    {"ci95_low", summary.ci_low},
                    {"ci95_high", summary.ci_high},
                    {"instances", summary.instances}}
                   .dump()
            << '\n';
    }
    return summary;
}

}  // namespace bow
