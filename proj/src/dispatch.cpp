#include "bow/dispatch.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include <json.hpp>

#include "bow/data.hpp"
#include "bow/errors.hpp"
#include "bow/eval.hpp"
#include "bow/grpo.hpp"
#include "bow/prompts.hpp"
#include "bow/remote.hpp"
#include "bow/reward.hpp"

namespace bow {

using nlohmann::json;

namespace {

void require_path(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingPathError(path);
}

std::vector<TokenSequence> load_token_corpus(const std::string& path, const Vocabulary& vocab) {
    std::vector<TokenSequence> sequences;
    for (const Document& doc : ingest_corpus(path, std::numeric_limits<std::size_t>::max())) {
        sequences.push_back(encode(doc.text, vocab));
    }
    return sequences;
}

NGramModel fit_judge(const RunConfig& cfg, const Vocabulary& vocab) {
    require_path(cfg.judge_corpus_path);
    return fit_ngram(load_token_corpus(cfg.judge_corpus_path, vocab), cfg.judge_order,
                     cfg.judge_smoothing, vocab.size());
}

// Vocabulary for a user-supplied corpus: markers first, then every distinct
// unit in first-appearance order.
Vocabulary vocabulary_from_documents(const std::vector<Document>& docs) {
    std::vector<std::string> tokens = {markers::kBos, markers::kEos, markers::kReasonStart,
                                       markers::kBoxOpen};
    std::unordered_map<std::string, bool> seen;
    for (const auto& t : tokens) seen[t] = true;
    for (const Document& doc : docs) {
        for (const std::string& unit : split_units(doc.text)) {
            if (!seen.count(unit)) {
                seen[unit] = true;
                tokens.push_back(unit);
            }
        }
    }
    return Vocabulary(std::move(tokens));
}

RewardConfig effective_reward(const RunConfig& cfg) {
    RewardConfig reward = cfg.reward;
    if (!cfg.regularizer_on) reward.alpha = 0.0;
    return reward;
}

int run_prepare(const RunConfig& cfg) {
    const std::string header = cfg.header_record();

    std::vector<Document> docs;
    std::unique_ptr<Vocabulary> vocab;
    if (cfg.synth_enabled) {
        SynthEnv env = synth_env_generate(cfg.synth, cfg.seed);
        docs = std::move(env.corpus);
        vocab = std::make_unique<Vocabulary>(env.vocab);
        save_vocabulary(*vocab, cfg.vocab_path);
        save_corpus(docs, cfg.corpus_path, header);

        std::vector<Document> judge_docs;
        judge_docs.reserve(env.judge_corpus.size());
        for (std::size_t i = 0; i < env.judge_corpus.size(); ++i) {
            Document doc;
            doc.id = "judge-" + std::to_string(i);
            doc.text = decode(env.judge_corpus[i], *vocab);
            doc.token_length = env.judge_corpus[i].size();
            judge_docs.push_back(std::move(doc));
        }
        save_corpus(judge_docs, cfg.judge_corpus_path, header);
        save_eval_instances(env.eval_instances, *vocab, cfg.eval_set_path, header);
    } else {
        require_path(cfg.corpus_path);
        docs = ingest_corpus(cfg.corpus_path, cfg.max_doc_tokens);
        vocab = std::make_unique<Vocabulary>(vocabulary_from_documents(docs));
        save_vocabulary(*vocab, cfg.vocab_path);
        // The judge reads the same text corpus in this mode.
        save_corpus(docs, cfg.judge_corpus_path, header);
    }

    std::vector<ContextTargetPair> pairs;
    for (const Document& doc : docs) {
        std::vector<ContextTargetPair> doc_pairs =
            extract_pairs(doc, *vocab, cfg.min_context_length);
        pairs.insert(pairs.end(), doc_pairs.begin(), doc_pairs.end());
    }

    std::vector<TokenSequence> reference_corpus;
    reference_corpus.reserve(docs.size());
    for (const Document& doc : docs) reference_corpus.push_back(encode(doc.text, *vocab));
    const NGramModel reference =
        fit_ngram(reference_corpus, cfg.judge_order, cfg.judge_smoothing, vocab->size());

    if (cfg.filter_mode == "classifier") {
        const std::string tmpl =
            load_prompt_template(cfg.prompt_dir + "/filtering_prompt.txt");
        std::unique_ptr<HttpCompletionClient> live;
        std::unique_ptr<CompletionClient> client;
        if (cfg.remote_mode == "replay") {
            client = std::make_unique<ReplayClient>(cfg.cassette_path);
        } else {
            live = std::make_unique<HttpCompletionClient>(cfg.endpoint);
            if (cfg.remote_mode == "record") {
                client = std::make_unique<RecordingClient>(*live, cfg.cassette_path);
            }
        }
        CompletionClient& endpoint = client ? *client : *live;
        CompletionFn complete = [&](const std::string& prompt) {
            CompletionRequest request;
            request.model = cfg.endpoint.model;
            request.prompt = prompt;
            request.max_tokens = 256;
            request.temperature = 0.0;
            request.logprobs = 1;
            return endpoint.complete(request).text;
        };
        ClassifierFilterResult filtered = classifier_filter(pairs, complete, *vocab, tmpl);
        if (filtered.skipped > 0) {
            std::cerr << "prepare: skipped " << filtered.skipped
                      << " pairs with unparseable filter judgments\n";
        }
        pairs = std::move(filtered.pairs);
    } else if (cfg.filter_mode == "heuristic") {
        pairs = heuristic_filter(std::move(pairs), reference, *vocab, split_csv(cfg.stopwords),
                                 cfg.determinism_threshold);
    } else {
        throw Error("unknown filter mode: " + cfg.filter_mode);
    }

    if (cfg.mode == Mode::kRandomFilter) {
        // Ablation: ignore the filter verdicts and keep a uniformly random
        // selection of the same size (or the configured count).
        std::size_t kept = 0;
        for (const auto& pair : pairs) kept += pair.verdict == Verdict::kKept ? 1 : 0;
        const std::size_t count = cfg.random_count > 0 ? cfg.random_count : kept;
        std::vector<ContextTargetPair> selected = random_filter(pairs, count, cfg.seed);
        for (auto& pair : selected) pair.verdict = Verdict::kKept;
        pairs = std::move(selected);
    }

    save_pairs(pairs, *vocab, cfg.pairs_path, header);

    std::size_t kept = 0;
    for (const auto& pair : pairs) kept += pair.verdict == Verdict::kKept ? 1 : 0;
    std::cout << "prepare: " << docs.size() << " documents, " << pairs.size() << " pairs ("
              << kept << " kept)\n";
    return 0;
}

int run_train(const RunConfig& cfg) {
    require_path(cfg.vocab_path);
    require_path(cfg.pairs_path);
    const Vocabulary vocab = load_vocabulary(cfg.vocab_path);

    std::vector<ContextTargetPair> all_pairs = load_pairs(cfg.pairs_path, vocab);
    std::vector<ContextTargetPair> kept;
    for (const auto& pair : all_pairs) {
        if (pair.verdict == Verdict::kKept) kept.push_back(pair);
    }
    if (kept.empty()) throw EmptySelectionError();

    LogLinearModel policy(cfg.feature_count, vocab.size(), cfg.window_length);
    SamplingConfig sampling = cfg.sampling;
    sampling.stop_token = vocab.eos();

    std::ofstream metrics_out(cfg.metrics_path);
    if (!metrics_out) throw UnreadablePathError(cfg.metrics_path);
    metrics_out << cfg.header_record() << '\n';

    auto write_metrics = [&](const std::vector<StepMetrics>& metrics) {
        for (const StepMetrics& m : metrics) {
            metrics_out << json{{"step", m.step},
                                {"mean_reward", m.mean_reward},
                                {"mean_base", m.mean_base},
                                {"mean_penalty", m.mean_penalty},
                                {"clipped_fraction", m.clipped_fraction},
                                {"grad_norm", m.grad_norm},
                                {"entropy", m.entropy}}
                               .dump()
                        << '\n';
        }
    };

    if (cfg.mode == Mode::kSlm) {
        const SlmTrainResult result = train_slm(policy, kept, cfg.train);
        save_checkpoint(policy, cfg.checkpoint_path);
        for (std::size_t i = 0; i < result.losses.size(); ++i) {
            metrics_out << json{{"step", i + 1}, {"slm_loss", result.losses[i]}}.dump() << '\n';
        }
        std::cout << "train: slm, " << result.losses.size() << " steps\n";
        return 0;
    }

    GroupScorer scorer;
    std::unique_ptr<NGramModel> judge;
    if (cfg.mode == Mode::kNoJudge) {
        // Hard reward; no judge model is ever loaded in this mode.
        const Vocabulary* vocab_ptr = &vocab;
        scorer = [vocab_ptr](RolloutGroup& group) {
            group.rewards.clear();
            group.breakdowns.clear();
            for (const Trajectory& traj : group.trajectories) {
                RewardBreakdown breakdown;
                breakdown.base = no_judge_reward(traj, group.gold_word, *vocab_ptr);
                breakdown.final_reward = breakdown.base;
                group.rewards.push_back(breakdown.final_reward);
                group.breakdowns.push_back(breakdown);
            }
        };
    } else {
        judge = std::make_unique<NGramModel>(fit_judge(cfg, vocab));
        scorer = make_judge_scorer(*judge, vocab.eos(), effective_reward(cfg));
    }

    const std::vector<StepMetrics> metrics = train_run(
        policy, kept, vocab, scorer, cfg.train, sampling, cfg.checkpoint_every, cfg.checkpoint_path);
    write_metrics(metrics);
    const double last = metrics.empty() ? 0.0 : metrics.back().mean_reward;
    std::cout << "train: " << mode_name(cfg.mode) << ", " << metrics.size()
              << " steps, final mean reward " << last << "\n";
    return 0;
}

int run_eval(const RunConfig& cfg) {
    require_path(cfg.vocab_path);
    require_path(cfg.eval_set_path);
    require_path(cfg.checkpoint_path);
    const Vocabulary vocab = load_vocabulary(cfg.vocab_path);
    const std::vector<EvalInstance> instances = load_eval_instances(cfg.eval_set_path, vocab);
    const LogLinearModel policy = load_checkpoint(cfg.checkpoint_path, cfg.window_length);
    if (policy.vocab_size() != vocab.size()) {
        throw ShapeMismatchError(vocab.size(), policy.vocab_size());
    }

    const bool no_judge = cfg.mode == Mode::kNoJudge;
    std::unique_ptr<NGramModel> judge;
    if (!no_judge) judge = std::make_unique<NGramModel>(fit_judge(cfg, vocab));

    const EvalSummary summary = run_evaluation(
        policy, judge.get(), instances, vocab, no_judge, cfg.eval_samples, cfg.eval_temperature,
        cfg.seed, cfg.sampling.max_trajectory_length, cfg.eval_judge_temperature,
        cfg.results_path, cfg.header_record());
    std::cout << "eval: accuracy " << summary.accuracy << " [" << summary.ci_low << ", "
              << summary.ci_high << "] over " << summary.instances << " instances\n";
    return 0;
}

int run_inspect_reward(const RunConfig& cfg, const DispatchArgs& args) {
    if (args.context_text.empty() || args.trajectory_text.empty() || args.gold_word.empty()) {
        throw Error("inspect-reward needs --context, --trajectory, and --gold");
    }
    require_path(cfg.vocab_path);
    const Vocabulary vocab = load_vocabulary(cfg.vocab_path);
    const NGramModel judge = fit_judge(cfg, vocab);

    Trajectory trajectory;
    trajectory.tokens = encode(args.trajectory_text, vocab);
    trajectory.log_probs.assign(trajectory.tokens.size(), 0.0);
    const TokenSequence context = encode(args.context_text, vocab);
    const auto gold = vocab.find(args.gold_word);
    if (!gold) throw UnknownTokenError(args.gold_word);

    const RewardBreakdown breakdown =
        final_reward(judge, trajectory, context, *gold, vocab.eos(), effective_reward(cfg));
    std::cout << "base      " << breakdown.base << "\n"
              << "penalty   " << breakdown.penalty << "\n"
              << "alpha     " << effective_reward(cfg).alpha << "\n"
              << "final     " << breakdown.final_reward << "\n"
              << "gold rank " << (breakdown.gold_rank ? std::to_string(*breakdown.gold_rank) : "-")
              << "\n";
    return 0;
}

}  // namespace

int dispatch(const std::string& command, const RunConfig& cfg, const DispatchArgs& args) {
    if (command == "prepare") return run_prepare(cfg);
    if (command == "train") return run_train(cfg);
    if (command == "eval") return run_eval(cfg);
    if (command == "inspect-reward") return run_inspect_reward(cfg, args);
    throw Error("unknown command: " + command);
}

}  // namespace bow
