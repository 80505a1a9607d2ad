#include "bow/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "bow/errors.hpp"
#include "bow/model.hpp"
#include "bow/prompts.hpp"
#include "bow/rng.hpp"

namespace bow {

using nlohmann::json;

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::kKept: return "kept";
        case Verdict::kDroppedFunctional: return "dropped-functional";
        case Verdict::kDroppedDeterministic: return "dropped-deterministic";
        case Verdict::kDroppedNoLatent: return "dropped-no-latent";
    }
    return "kept";
}

std::optional<Verdict> verdict_from_name(const std::string& name) {
    if (name == "kept") return Verdict::kKept;
    if (name == "dropped-functional") return Verdict::kDroppedFunctional;
    if (name == "dropped-deterministic") return Verdict::kDroppedDeterministic;
    if (name == "dropped-no-latent") return Verdict::kDroppedNoLatent;
    return std::nullopt;
}

namespace {

bool is_header_record(const json& record) { return record.contains("config_hash"); }

bool is_punctuation(const std::string& token) {
    if (token.empty()) return false;
    for (unsigned char c : token) {
        if (!std::ispunct(c)) return false;
    }
    return true;
}

}  // namespace

std::vector<Document> ingest_corpus(const std::string& path, std::size_t max_tokens) {
    std::ifstream in(path);
    if (!in) throw UnreadablePathError(path);
    std::vector<Document> docs;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecordError(line_number, e.what());
        }
        if (is_header_record(record)) continue;
        if (!record.contains("id") || !record["id"].is_string()) {
            throw MalformedRecordError(line_number, "missing string field 'id'");
        }
        if (!record.contains("text") || !record["text"].is_string()) {
            throw MalformedRecordError(line_number, "missing string field 'text'");
        }
        Document doc;
        doc.id = record["id"].get<std::string>();
        doc.text = record["text"].get<std::string>();
        doc.token_length = split_units(doc.text).size();
        if (doc.token_length <= max_tokens) docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<ContextTargetPair> extract_pairs(const Document& doc, const Vocabulary& vocab,
                                             std::size_t min_context_length) {
    if (min_context_length < 1) throw Error("min context length must be >= 1");
    const TokenSequence tokens = encode(doc.text, vocab);
    std::vector<ContextTargetPair> pairs;
    for (std::size_t pos = min_context_length; pos < tokens.size(); ++pos) {
        ContextTargetPair pair;
        pair.context.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(pos));
        pair.gold = tokens[pos];
        pair.doc_id = doc.id;
        pair.offset = pos;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<ContextTargetPair> heuristic_filter(std::vector<ContextTargetPair> pairs,
                                                const NGramModel& reference,
                                                const Vocabulary& vocab,
                                                const std::vector<std::string>& stopwords,
                                                double determinism_threshold) {
    const std::unordered_set<std::string> stopword_set(stopwords.begin(), stopwords.end());
    for (ContextTargetPair& pair : pairs) {
        const std::string& gold = vocab.token(pair.gold);
        if (stopword_set.count(gold) > 0 || is_punctuation(gold)) {
            pair.verdict = Verdict::kDroppedFunctional;
            continue;
        }
        const TokenDistribution dist = next_token_distribution(reference, pair.context, 1.0);
        if (dist[pair.gold] > determinism_threshold) {
            pair.verdict = Verdict::kDroppedDeterministic;
            continue;
        }
        pair.verdict = Verdict::kKept;
    }
    return pairs;
}

std::vector<ContextTargetPair> random_filter(const std::vector<ContextTargetPair>& pairs,
                                             std::size_t count, std::uint64_t seed) {
    if (count > pairs.size()) throw CountTooLargeError(count, pairs.size());
    std::vector<std::size_t> indices(pairs.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng = derive_rng(seed, 0x8a2d);
    std::vector<ContextTargetPair> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.next_below(indices.size() - i);
        std::swap(indices[i], indices[j]);
        out.push_back(pairs[indices[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic hint-grammar environment.
// ---------------------------------------------------------------------------

void SynthEnvSpec::validate() const {
    if (categories < 1 || words_per_category < 1 || templates < 1 || corpus_size < 1) {
        throw Error("synthetic environment counts must all be >= 1");
    }
    const std::size_t total = 5 + 2 * categories + categories * words_per_category + 3 * templates;
    if (total > 512) throw SpecTooLargeError(total);
}

namespace {

// Repetition counts for the judge corpus. Three levels matter at judge
// temperature 5: the cue's own-category words sit well above its
// cross-category floor, which in turn sits above the smoothing floor that
// non-word tokens fall to. The cross-category floor keeps any cue-ending
// trajectory closer to the reference distribution than an uninformative one,
// so exploring cues is never worse than emitting junk. The narrow hint
// concentrates on a single word far above everything else.
constexpr std::size_t kCueReps = 500;
constexpr std::size_t kCrossReps = 50;
constexpr std::size_t kNarrowReps = 5000;
constexpr std::size_t kEchoReps = 2000;
constexpr std::size_t kFillersPerTemplate = 3;
// Probability that a sentence's gold word is its category's designated word.
constexpr double kDesignatedBias = 0.75;
constexpr std::size_t kEvalCandidates = 4;

struct SentenceDraw {
    std::size_t category;
    std::size_t template_index;
    TokenId gold;
};

}  // namespace

SynthEnv synth_env_generate(const SynthEnvSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t C = spec.categories;
    const std::size_t W = spec.words_per_category;
    const std::size_t T = spec.templates;

    // Vocabulary: markers first, then the content tokens in an order shuffled
    // by the vocabulary seed so nothing downstream can rely on token ids.
    std::vector<std::string> content;
    for (std::size_t c = 0; c < C; ++c) content.push_back("topic" + std::to_string(c));
    for (std::size_t c = 0; c < C; ++c) content.push_back("exact" + std::to_string(c));
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t w = 0; w < W; ++w) {
            content.push_back("w" + std::to_string(c) + "_" + std::to_string(w));
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < kFillersPerTemplate; ++k) {
            content.push_back("fill" + std::to_string(t) + "_" + std::to_string(k));
        }
    }
    {
        Rng shuffle_rng = derive_rng(spec.vocab_seed, 0x51);
        for (std::size_t i = content.size(); i > 1; --i) {
            std::swap(content[i - 1], content[shuffle_rng.next_below(i)]);
        }
    }
    std::vector<std::string> tokens = {markers::kBos, markers::kEos, markers::kReasonStart,
                                       markers::kBoxOpen, "."};
    tokens.insert(tokens.end(), content.begin(), content.end());

    SynthEnv env{Vocabulary(std::move(tokens)), {}, {}, {}, {}, {}, {}, {}};
    const Vocabulary& vocab = env.vocab;

    auto id_of = [&](const std::string& s) { return *vocab.find(s); };
    for (std::size_t c = 0; c < C; ++c) {
        env.cue_tokens.push_back(id_of("topic" + std::to_string(c)));
        env.narrow_hints.push_back(id_of("exact" + std::to_string(c)));
        std::vector<TokenId> words;
        for (std::size_t w = 0; w < W; ++w) {
            words.push_back(id_of("w" + std::to_string(c) + "_" + std::to_string(w)));
        }
        env.designated_words.push_back(words.front());
        env.category_words.push_back(std::move(words));
    }

    auto draw_sentence = [&](std::size_t index, Rng& rng) {
        SentenceDraw draw;
        draw.category = index % C;
        // Templates are owned by categories (t -> t mod C) so that the filler
        // chain deterministically implies the cue; if a category has no
        // template of its own, it borrows one.
        std::vector<std::size_t> owned;
        for (std::size_t t = 0; t < T; ++t) {
            if (t % C == draw.category) owned.push_back(t);
        }
        draw.template_index =
            owned.empty() ? draw.category % T : owned[rng.next_below(owned.size())];
        const auto& words = env.category_words[draw.category];
        if (W == 1 || rng.next_double() < kDesignatedBias) {
            draw.gold = env.designated_words[draw.category];
        } else {
            draw.gold = words[1 + rng.next_below(W - 1)];
        }
        return draw;
    };

    auto sentence_context = [&](const SentenceDraw& draw) {
        std::string text;
        for (std::size_t k = 0; k < kFillersPerTemplate; ++k) {
            text += "fill" + std::to_string(draw.template_index) + "_" + std::to_string(k) + " ";
        }
        text += "topic" + std::to_string(draw.category);
        return text;
    };

    // Training corpus.
    Rng corpus_rng = derive_rng(seed, 0xc0);
    for (std::size_t i = 0; i < spec.corpus_size; ++i) {
        const SentenceDraw draw = draw_sentence(i, corpus_rng);
        Document doc;
        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "synth-%06zu", i);
        doc.id = id_buf;
        doc.text = sentence_context(draw) + " " + vocab.token(draw.gold) + " .";
        doc.token_length = split_units(doc.text).size();
        env.corpus.push_back(std::move(doc));
    }

    // Judge corpus: hint-token sequences followed by a gold word. The cue
    // decodes to the whole category with a cross-category floor over all
    // other words; the narrow hint decodes to the designated word alone.
    for (std::size_t c = 0; c < C; ++c) {
        for (TokenId word : env.category_words[c]) {
            for (std::size_t r = 0; r < kCueReps; ++r) {
                env.judge_corpus.push_back({env.cue_tokens[c], word});
            }
        }
        for (std::size_t other = 0; other < C; ++other) {
            if (other == c) continue;
            for (TokenId word : env.category_words[other]) {
                for (std::size_t r = 0; r < kCrossReps; ++r) {
                    env.judge_corpus.push_back({env.cue_tokens[c], word});
                }
            }
        }
        for (std::size_t r = 0; r < kNarrowReps; ++r) {
            env.judge_corpus.push_back({env.narrow_hints[c], env.designated_words[c]});
        }
        // Word echoes: naming a word directly makes the judge concentrate on
        // that word. Raw reward loves this; the reference penalty does not.
        for (TokenId word : env.category_words[c]) {
            for (std::size_t r = 0; r < kEchoReps; ++r) {
                env.judge_corpus.push_back({word, word});
            }
        }
    }

    // Held-out eval instances: gold-category word plus distractors from
    // distinct other categories.
    const std::size_t eval_count = std::max<std::size_t>(1, spec.corpus_size / 4);
    Rng eval_rng = derive_rng(seed, 0xe7);
    for (std::size_t i = 0; i < eval_count; ++i) {
        const SentenceDraw draw = draw_sentence(i, eval_rng);
        EvalInstance instance;
        instance.context = encode(sentence_context(draw), vocab);
        std::vector<TokenId> candidates = {draw.gold};
        if (C > 1) {
            std::vector<std::size_t> others;
            for (std::size_t c = 0; c < C; ++c) {
                if (c != draw.category) others.push_back(c);
            }
            for (std::size_t k = others.size(); k > 1; --k) {
                std::swap(others[k - 1], others[eval_rng.next_below(k)]);
            }
            const std::size_t distractors = std::min(kEvalCandidates - 1, others.size());
            for (std::size_t d = 0; d < distractors; ++d) {
                const auto& words = env.category_words[others[d]];
                candidates.push_back(words[eval_rng.next_below(words.size())]);
            }
        }
        for (std::size_t k = candidates.size(); k > 1; --k) {
            std::swap(candidates[k - 1], candidates[eval_rng.next_below(k)]);
        }
        instance.gold_index = static_cast<std::size_t>(
            std::find(candidates.begin(), candidates.end(), draw.gold) - candidates.begin());
        instance.candidates = std::move(candidates);
        if (instance.candidates.size() >= 2) env.eval_instances.push_back(std::move(instance));
    }

    return env;
}

// ---------------------------------------------------------------------------
// Classifier-path filtering.
// ---------------------------------------------------------------------------

ClassifierFilterResult classifier_filter(const std::vector<ContextTargetPair>& pairs,
                                         const CompletionFn& complete, const Vocabulary& vocab,
                                         const std::string& prompt_template) {
    ClassifierFilterResult result;
    for (const ContextTargetPair& pair : pairs) {
        std::string prompt = fill_prompt(prompt_template, "context", decode(pair.context, vocab));
        prompt = fill_prompt(std::move(prompt), "completion", vocab.token(pair.gold));
        const std::string body = complete(prompt);

        FilterDecision decision;
        try {
            const json parsed = json::parse(body);
            if (!parsed.contains("requires_reasoning") || !parsed["requires_reasoning"].is_boolean() ||
                !parsed.contains("explanation") || !parsed["explanation"].is_string()) {
                throw UnparseableJudgmentError(body);
            }
            decision.requires_reasoning = parsed["requires_reasoning"].get<bool>();
            decision.explanation = parsed["explanation"].get<std::string>();
            if (decision.explanation.empty()) throw UnparseableJudgmentError(body);
        } catch (const json::exception&) {
            ++result.skipped;
            continue;
        } catch (const UnparseableJudgmentError&) {
            ++result.skipped;
            continue;
        }

        ContextTargetPair annotated = pair;
        annotated.verdict = decision.requires_reasoning ? Verdict::kKept : Verdict::kDroppedNoLatent;
        annotated.decision = std::move(decision);
        result.pairs.push_back(std::move(annotated));
    }
    return result;
}

// ---------------------------------------------------------------------------
// File formats.
// ---------------------------------------------------------------------------

void save_corpus(const std::vector<Document>& docs, const std::string& path,
                 const std::string& header) {
    std::ofstream out(path);
    if (!out) throw UnreadablePathError(path);
    if (!header.empty()) out << header << '\n';
    for (const Document& doc : docs) {
        out << json{{"id", doc.id}, {"text", doc.text}}.dump() << '\n';
    }
}

void save_pairs(const std::vector<ContextTargetPair>& pairs, const Vocabulary& vocab,
                const std::string& path, const std::string& header) {
    std::ofstream out(path);
    if (!out) throw UnreadablePathError(path);
    if (!header.empty()) out << header << '\n';
    for (const ContextTargetPair& pair : pairs) {
        out << json{{"context", decode(pair.context, vocab)},
                    {"gold", vocab.token(pair.gold)},
                    {"verdict", verdict_name(pair.verdict)},
                    {"doc_id", pair.doc_id},
                    {"offset", pair.offset}}
                   .dump()
            << '\n';
    }
}

std::vector<ContextTargetPair> load_pairs(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw UnreadablePathError(path);
    std::vector<ContextTargetPair> pairs;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecordError(line_number, e.what());
        }
        if (is_header_record(record)) continue;
        try {
            ContextTargetPair pair;
            pair.context = encode(record.at("context").get<std::string>(), vocab);
            const auto gold = vocab.find(record.at("gold").get<std::string>());
            if (!gold) throw UnknownTokenError(record.at("gold").get<std::string>());
            pair.gold = *gold;
            const auto verdict = verdict_from_name(record.at("verdict").get<std::string>());
            if (!verdict) throw Error("unknown verdict");
            pair.verdict = *verdict;
            pair.doc_id = record.at("doc_id").get<std::string>();
            pair.offset = record.at("offset").get<std::size_t>();
            pairs.push_back(std::move(pair));
        } catch (const json::exception& e) {
            throw MalformedRecordError(line_number, e.what());
        }
    }
    return pairs;
}

void save_eval_instances(const std::vector<EvalInstance>& instances, const Vocabulary& vocab,
                         const std::string& path, const std::string& header) {
    std::ofstream out(path);
    if (!out) throw UnreadablePathError(path);
    if (!header.empty()) out << header << '\n';
    for (const EvalInstance& instance : instances) {
        json candidates = json::array();
        for (TokenId id : instance.candidates) candidates.push_back(vocab.token(id));
        out << json{{"context", decode(instance.context, vocab)},
                    {"candidates", candidates},
                    {"gold_index", instance.gold_index}}
                   .dump()
            << '\n';
    }
}

std::vector<EvalInstance> load_eval_instances(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw UnreadablePathError(path);
    std::vector<EvalInstance> instances;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecordError(line_number, e.what());
        }
        if (is_header_record(record)) continue;
        try {
            EvalInstance instance;
            instance.context = encode(record.at("context").get<std::string>(), vocab);
            for (const auto& word : record.at("candidates")) {
                const auto id = vocab.find(word.get<std::string>());
                if (!id) throw UnknownTokenError(word.get<std::string>());
                instance.candidates.push_back(*id);
            }
            instance.gold_index = record.at("gold_index").get<std::size_t>();
            instance.validate();
            instances.push_back(std::move(instance));
        } catch (const json::exception& e) {
            throw MalformedRecordError(line_number, e.what());
        }
    }
    return instances;
}

}  // namespace bow
