#pragma once

#include <map>
#include <string>
#include <vector>

#include "bow/data.hpp"
#include "bow/grpo.hpp"
#include "bow/remote.hpp"
#include "bow/rollout.hpp"

namespace bow {

enum class Mode { kBow, kNoJudge, kSlm, kRandomFilter };

std::string mode_name(Mode mode);

// Everything a run needs, resolved from a flat key = value file plus
// command-line overrides. Defaults follow the training and reward settings
// the pipeline is documented with; see README for the key table.
struct RunConfig {
    Mode mode = Mode::kBow;
    bool regularizer_on = true;
    std::uint64_t seed = 0;

    RewardConfig reward;      // alpha, judge_temperature, top_k
    SamplingConfig sampling;  // group_size, max_trajectory_length, sampling_temperature
    TrainConfig train;
    SynthEnvSpec synth;
    bool synth_enabled = true;

    std::size_t judge_order = 2;
    double judge_smoothing = 0.1;
    std::size_t feature_count = 512;
    std::size_t window_length = 3;

    std::size_t eval_samples = 10;
    double eval_temperature = 0.8;
    double eval_judge_temperature = 1.0;

    std::size_t random_count = 0;  // 0: match the heuristic filter's kept count
    std::size_t min_context_length = 1;
    std::size_t max_doc_tokens = 2048;
    double determinism_threshold = 0.9;
    std::string stopwords =
        "a,an,the,of,to,in,and,or,is,was,on,at,as,by,for,with,that,this,it,its";

    std::size_t checkpoint_every = 0;

    std::string corpus_path = "corpus.jsonl";
    std::string judge_corpus_path = "judge_corpus.jsonl";
    std::string pairs_path = "pairs.jsonl";
    std::string eval_set_path = "eval.jsonl";
    std::string vocab_path = "vocab.txt";
    std::string checkpoint_path = "checkpoint.txt";
    std::string metrics_path = "metrics.jsonl";
    std::string results_path = "results.jsonl";

    std::string filter_mode = "heuristic";  // heuristic | classifier
    std::string prompt_dir = "prompts";
    EndpointConfig endpoint;
    std::string remote_mode = "live";  // live | record | replay
    std::string cassette_path;

    // Applies one key = value assignment; unknown keys and unparseable
    // values throw. Used for both file lines and command-line overrides.
    void apply(const std::string& key, const std::string& value);

    // Fully-resolved key -> value map, in documented key order.
    std::map<std::string, std::string> echo() const;

    // FNV-1a hash over the echo, hex-encoded. Written into every artifact.
    std::string hash() const;

    // JSON header record {"config_hash": ..., "config": {...}}.
    std::string header_record() const;
};

// Flat key = value file ('#' starts a comment). Unknown keys are rejected;
// absent keys keep their defaults.
RunConfig load_config(const std::string& path);

std::vector<std::string> split_csv(const std::string& csv);

}  // namespace bow
