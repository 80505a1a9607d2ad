#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bow/eval_types.hpp"
#include "bow/ngram.hpp"
#include "bow/pair_types.hpp"
#include "bow/vocab.hpp"

namespace bow {

struct Document {
    std::string id;
    std::string text;
    std::size_t token_length = 0;
};

// JSON-lines corpus of {"id", "text"} records. Documents longer than
// max_tokens (whitespace units) are dropped; order is preserved.
std::vector<Document> ingest_corpus(const std::string& path, std::size_t max_tokens = 2048);

// One pair per token position at or past min_context_length: the context is
// every preceding token, the gold is the token at the position.
std::vector<ContextTargetPair> extract_pairs(const Document& doc, const Vocabulary& vocab,
                                             std::size_t min_context_length);

// Rule-based approximation of the reasoning-token criteria: drops golds that
// are stopwords or punctuation (functional), then golds the reference model
// already predicts above the determinism threshold. Everything else is kept.
std::vector<ContextTargetPair> heuristic_filter(std::vector<ContextTargetPair> pairs,
                                                const NGramModel& reference,
                                                const Vocabulary& vocab,
                                                const std::vector<std::string>& stopwords,
                                                double determinism_threshold = 0.9);

// Uniform sample of `count` pairs without replacement, deterministic under
// the seed. Order of the result follows the draw order.
std::vector<ContextTargetPair> random_filter(const std::vector<ContextTargetPair>& pairs,
                                             std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic hint-grammar environment.
//
// Sentences pair a category cue (the last context word) with a gold word
// drawn from that category, skewed toward one designated word per category.
// The judge corpus teaches two decodings: the cue token maps to a smooth
// distribution over the whole category, and a per-category "narrow" hint maps
// sharply to the designated word alone. Chasing raw reward therefore pulls
// toward the narrow hint, while the L1 regularizer pulls back toward the
// smooth cue; the two training modes are distinguishable by behavior, not
// just by score.
// ---------------------------------------------------------------------------

struct SynthEnvSpec {
    std::size_t categories = 8;
    std::size_t words_per_category = 6;
    std::size_t templates = 8;
    std::uint64_t vocab_seed = 0;
    std::size_t corpus_size = 2000;

    void validate() const;
};

struct SynthEnv {
    Vocabulary vocab;
    std::vector<Document> corpus;
    std::vector<TokenSequence> judge_corpus;
    std::vector<EvalInstance> eval_instances;

    // Layout handles for exhaustive tests: per-category cue / narrow-hint
    // token ids, member word ids, and the designated (skewed) word.
    std::vector<TokenId> cue_tokens;
    std::vector<TokenId> narrow_hints;
    std::vector<std::vector<TokenId>> category_words;
    std::vector<TokenId> designated_words;
};

SynthEnv synth_env_generate(const SynthEnvSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Classifier-path filtering through a completion client.
// ---------------------------------------------------------------------------

// Returns the model's raw completion text for a prompt. Implemented by the
// remote adapter; tests substitute deterministic stand-ins.
using CompletionFn = std::function<std::string(const std::string& prompt)>;

struct ClassifierFilterResult {
    std::vector<ContextTargetPair> pairs;  // annotated; unparseable responses excluded
    std::size_t skipped = 0;               // count of excluded pairs
};

// Sends each pair through the filtering prompt template ({context} and
// {completion} placeholders) and keeps it iff the returned JSON object says
// requires_reasoning. Responses that do not parse drop the pair entirely --
// unvetted pairs never reach training -- and are counted in `skipped`.
ClassifierFilterResult classifier_filter(const std::vector<ContextTargetPair>& pairs,
                                         const CompletionFn& complete, const Vocabulary& vocab,
                                         const std::string& prompt_template);

// ---------------------------------------------------------------------------
// File formats.
// ---------------------------------------------------------------------------

void save_corpus(const std::vector<Document>& docs, const std::string& path,
                 const std::string& header = "");

// Pairs: JSON-lines {"context", "gold", "verdict", "doc_id", "offset"}.
// An optional leading header object (any record with a "config_hash" key) is
// written by the CLI and skipped on load.
void save_pairs(const std::vector<ContextTargetPair>& pairs, const Vocabulary& vocab,
                const std::string& path, const std::string& header = "");
std::vector<ContextTargetPair> load_pairs(const std::string& path, const Vocabulary& vocab);

// Eval instances: JSON-lines {"context", "candidates": [words], "gold_index"}.
void save_eval_instances(const std::vector<EvalInstance>& instances, const Vocabulary& vocab,
                         const std::string& path, const std::string& header = "");
std::vector<EvalInstance> load_eval_instances(const std::string& path, const Vocabulary& vocab);

}  // namespace bow
