#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "bow/data.hpp"
#include "bow/errors.hpp"
#include "bow/model.hpp"
#include "helpers.hpp"

using namespace bow;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::ofstream out(name);
    out << content;
    return name;
}

std::string doc_of_length(std::size_t n) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) text += ' ';
        text += 'a' + char(i % 2);
    }
    return text;
}

}  // namespace

TEST_CASE("ingest keeps documents up to the token limit, inclusive") {
    std::string content;
    content += R"({"id":"d1","text":")" + doc_of_length(100) + "\"}\n";
    content += R"({"id":"d2","text":")" + doc_of_length(2049) + "\"}\n";
    content += R"({"id":"d3","text":")" + doc_of_length(2048) + "\"}\n";
    const std::string path = write_temp("corpus_ingest.jsonl", content);
    const std::vector<Document> docs = ingest_corpus(path);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "d1");
    CHECK(docs[1].id == "d3");
    CHECK(docs[1].token_length == 2048);
    std::filesystem::remove(path);
}

TEST_CASE("ingest handles empty files and rejects malformed records") {
    const std::string empty = write_temp("corpus_empty.jsonl", "");
    CHECK(ingest_corpus(empty).empty());
    std::filesystem::remove(empty);

    const std::string missing = write_temp("corpus_bad.jsonl", R"({"id":"x"})"
                                                               "\n");
    CHECK_THROWS_AS(ingest_corpus(missing), MalformedRecordError);
    std::filesystem::remove(missing);

    const std::string garbage = write_temp("corpus_garbage.jsonl", "not json\n");
    CHECK_THROWS_AS(ingest_corpus(garbage), MalformedRecordError);
    std::filesystem::remove(garbage);

    CHECK_THROWS_AS(ingest_corpus("no_such_file.jsonl"), UnreadablePathError);
}

TEST_CASE("extract_pairs yields one pair per position past the minimum") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    Document doc{"d", "a b c a b", 5};
    const std::vector<ContextTargetPair> pairs = extract_pairs(doc, vocab, 2);
    REQUIRE(pairs.size() == 3);
    const TokenSequence full = encode(doc.text, vocab);
    for (const ContextTargetPair& pair : pairs) {
        CHECK(pair.context.size() == pair.offset);
        // Reconstruction oracle: context + gold reproduces the prefix.
        TokenSequence rebuilt = pair.context;
        rebuilt.push_back(pair.gold);
        CHECK(rebuilt ==
              TokenSequence(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(pair.offset + 1)));
        CHECK(pair.doc_id == "d");
    }
}

TEST_CASE("heuristic filter applies the functional, deterministic, kept order") {
    const Vocabulary vocab =
        Vocabulary({"<bos>", "<eos>", "<reason>", "a", "pair", "of", "socks", "x", "y"});
    // Reference corpus: "x y" repeated makes y deterministic after x;
    // "pair of" and "pair socks" give "of" a sub-threshold probability.
    std::vector<TokenSequence> ref_corpus;
    for (int i = 0; i < 50; ++i) ref_corpus.push_back(encode("x y", vocab));
    ref_corpus.push_back(encode("a pair of socks", vocab));
    ref_corpus.push_back(encode("of x of y of pair", vocab));
    const NGramModel reference = fit_ngram(ref_corpus, 2, 0.001, vocab.size());

    std::vector<ContextTargetPair> pairs(3);
    pairs[0].context = encode("a pair", vocab);
    pairs[0].gold = *vocab.find("of");  // stopword: functional
    pairs[1].context = encode("x", vocab);
    pairs[1].gold = *vocab.find("y");  // reference prob ~1: deterministic
    pairs[2].context = encode("a pair of", vocab);
    pairs[2].gold = *vocab.find("socks");  // content word: kept

    const std::vector<ContextTargetPair> out =
        heuristic_filter(pairs, reference, vocab, {"of", "a", "the"}, 0.9);
    REQUIRE(out.size() == 3);
    CHECK(out[0].verdict == Verdict::kDroppedFunctional);
    CHECK(out[1].verdict == Verdict::kDroppedDeterministic);
    CHECK(out[2].verdict == Verdict::kKept);

    // Stability: a second pass yields identical verdicts.
    const std::vector<ContextTargetPair> again =
        heuristic_filter(out, reference, vocab, {"of", "a", "the"}, 0.9);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].verdict == out[i].verdict);

    // Punctuation golds are functional even without a stopword entry.
    const Vocabulary pv = Vocabulary({"<bos>", "<eos>", "<reason>", "w", "."});
    std::vector<ContextTargetPair> punct(1);
    punct[0].context = encode("w", pv);
    punct[0].gold = *pv.find(".");
    const NGramModel pref = fit_ngram({encode("w .", pv)}, 2, 0.1, pv.size());
    CHECK(heuristic_filter(punct, pref, pv, {}, 0.9)[0].verdict == Verdict::kDroppedFunctional);
}

TEST_CASE("filtering partitions the input without losing provenance") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    Document doc{"doc-7", "a b c a b c a", 7};
    const std::vector<ContextTargetPair> pairs = extract_pairs(doc, vocab, 1);
    const NGramModel reference = fit_ngram({encode(doc.text, vocab)}, 2, 0.1, vocab.size());
    const std::vector<ContextTargetPair> out = heuristic_filter(pairs, reference, vocab, {}, 0.9);
    REQUIRE(out.size() == pairs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].doc_id == pairs[i].doc_id);
        CHECK(out[i].offset == pairs[i].offset);
        CHECK(out[i].gold == pairs[i].gold);
    }
}

TEST_CASE("classifier filter maps judgments and skips unparseable ones") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    std::vector<ContextTargetPair> pairs(3);
    for (std::size_t i = 0; i < 3; ++i) {
        pairs[i].context = encode("a b", vocab);
        pairs[i].gold = *vocab.find("c");
        pairs[i].doc_id = "d" + std::to_string(i);
    }
    const std::string tmpl = "ctx: {context} next: {completion}";
    std::size_t calls = 0;
    CompletionFn fake = [&](const std::string& prompt) -> std::string {
        CHECK(prompt.find("ctx: a b next: c") == 0);
        switch (calls++) {
            case 0: return R"({"requires_reasoning": true, "explanation": "needs it"})";
            case 1: return R"({"requires_reasoning": false, "explanation": "grammar"})";
            default: return "sorry, no json here";
        }
    };
    const ClassifierFilterResult result = classifier_filter(pairs, fake, vocab, tmpl);
    REQUIRE(result.pairs.size() == 2);
    CHECK(result.skipped == 1);
    CHECK(result.pairs[0].verdict == Verdict::kKept);
    CHECK(result.pairs[0].decision->requires_reasoning);
    CHECK(result.pairs[0].decision->explanation == "needs it");
    CHECK(result.pairs[1].verdict == Verdict::kDroppedNoLatent);

    // Empty explanations are not trusted either.
    CompletionFn empty_explanation = [](const std::string&) {
        return R"({"requires_reasoning": true, "explanation": ""})";
    };
    const ClassifierFilterResult strict =
        classifier_filter({pairs[0]}, empty_explanation, vocab, tmpl);
    CHECK(strict.pairs.empty());
    CHECK(strict.skipped == 1);
}

TEST_CASE("synthetic environment pairs gold words with the cued category") {
    SynthEnvSpec spec;
    spec.categories = 2;
    spec.words_per_category = 2;
    spec.templates = 2;
    spec.corpus_size = 40;
    const SynthEnv env = synth_env_generate(spec, 5);

    for (const Document& doc : env.corpus) {
        const TokenSequence tokens = encode(doc.text, env.vocab);
        REQUIRE(tokens.size() >= 3);
        // Layout: fillers... cue gold "."
        const TokenId cue = tokens[tokens.size() - 3];
        const TokenId gold = tokens[tokens.size() - 2];
        const auto cue_it = std::find(env.cue_tokens.begin(), env.cue_tokens.end(), cue);
        REQUIRE(cue_it != env.cue_tokens.end());
        const std::size_t category =
            static_cast<std::size_t>(cue_it - env.cue_tokens.begin());
        const auto& words = env.category_words[category];
        CHECK(std::find(words.begin(), words.end(), gold) != words.end());
    }
}

TEST_CASE("fitted judge decodes correct hints above wrong hints for every category") {
    SynthEnvSpec spec;
    spec.categories = 4;
    spec.words_per_category = 3;
    spec.templates = 4;
    spec.corpus_size = 16;
    const SynthEnv env = synth_env_generate(spec, 9);
    const NGramModel judge = fit_ngram(env.judge_corpus, 2, 0.1, env.vocab.size());

    for (std::size_t c = 0; c < spec.categories; ++c) {
        const TokenDistribution right = next_token_distribution(judge, {env.cue_tokens[c]}, 5.0);
        for (std::size_t other = 0; other < spec.categories; ++other) {
            if (other == c) continue;
            const TokenDistribution wrong =
                next_token_distribution(judge, {env.cue_tokens[other]}, 5.0);
            for (TokenId word : env.category_words[c]) {
                CHECK(right[word] > wrong[word]);
            }
        }
        // The narrow hint concentrates on the designated word harder than
        // the smooth cue does.
        const TokenDistribution narrow =
            next_token_distribution(judge, {env.narrow_hints[c]}, 5.0);
        CHECK(narrow[env.designated_words[c]] > right[env.designated_words[c]]);
    }
}

TEST_CASE("synthetic environment is byte-deterministic under the seed") {
    SynthEnvSpec spec;
    spec.categories = 3;
    spec.words_per_category = 2;
    spec.templates = 3;
    spec.corpus_size = 30;
    const SynthEnv a = synth_env_generate(spec, 123);
    const SynthEnv b = synth_env_generate(spec, 123);
    REQUIRE(a.corpus.size() == b.corpus.size());
    for (std::size_t i = 0; i < a.corpus.size(); ++i) CHECK(a.corpus[i].text == b.corpus[i].text);
    CHECK(a.judge_corpus == b.judge_corpus);
    REQUIRE(a.eval_instances.size() == b.eval_instances.size());
    for (std::size_t i = 0; i < a.eval_instances.size(); ++i) {
        CHECK(a.eval_instances[i].context == b.eval_instances[i].context);
        CHECK(a.eval_instances[i].candidates == b.eval_instances[i].candidates);
        CHECK(a.eval_instances[i].gold_index == b.eval_instances[i].gold_index);
    }
    CHECK(a.vocab.tokens() == b.vocab.tokens());

    const SynthEnv c = synth_env_generate(spec, 124);
    bool any_difference = false;
    for (std::size_t i = 0; i < std::min(a.corpus.size(), c.corpus.size()); ++i) {
        if (a.corpus[i].text != c.corpus[i].text) any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("eval instances hold distinct candidates with one gold index") {
    SynthEnvSpec spec;
    spec.corpus_size = 400;
    const SynthEnv env = synth_env_generate(spec, 77);
    CHECK(env.eval_instances.size() == 100);
    for (const EvalInstance& instance : env.eval_instances) {
        CHECK_NOTHROW(instance.validate());
        CHECK(instance.candidates.size() == 4);
        // Exactly one candidate is the gold: distinctness plus a valid index.
        std::set<TokenId> unique(instance.candidates.begin(), instance.candidates.end());
        CHECK(unique.size() == instance.candidates.size());
    }
}

TEST_CASE("oversized synthetic specs are rejected") {
    SynthEnvSpec spec;
    spec.categories = 60;
    spec.words_per_category = 8;
    CHECK_THROWS_AS(synth_env_generate(spec, 1), SpecTooLargeError);
    SynthEnvSpec zero;
    zero.categories = 0;
    CHECK_THROWS_AS(synth_env_generate(zero, 1), Error);
}

TEST_CASE("random_filter draws uniform samples without replacement") {
    std::vector<ContextTargetPair> pairs(10);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        pairs[i].context = {0};
        pairs[i].gold = 0;
        pairs[i].offset = i;
    }
    const std::vector<ContextTargetPair> all = random_filter(pairs, pairs.size(), 3);
    std::set<std::size_t> seen;
    for (const auto& pair : all) seen.insert(pair.offset);
    CHECK(seen.size() == pairs.size());

    CHECK(random_filter(pairs, 0, 3).empty());
    CHECK_THROWS_AS(random_filter(pairs, 11, 3), CountTooLargeError);

    // Monte-Carlo frequency oracle: over many seeds, each element appears in
    // a 5-of-10 sample with frequency 0.5 within +-0.02.
    std::vector<std::size_t> hits(10, 0);
    const std::size_t seeds = 10000;
    for (std::size_t seed = 0; seed < seeds; ++seed) {
        for (const auto& pair : random_filter(pairs, 5, seed)) hits[pair.offset] += 1;
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const double freq = static_cast<double>(hits[i]) / static_cast<double>(seeds);
        CHECK(std::abs(freq - 0.5) < 0.02);
    }
}

TEST_CASE("pairs and eval instances round trip through their files") {
    const Vocabulary vocab = bowtest::tiny_vocab();
    std::vector<ContextTargetPair> pairs(2);
    pairs[0].context = encode("a b", vocab);
    pairs[0].gold = *vocab.find("c");
    pairs[0].verdict = Verdict::kKept;
    pairs[0].doc_id = "d0";
    pairs[0].offset = 2;
    pairs[1].context = encode("c", vocab);
    pairs[1].gold = *vocab.find("a");
    pairs[1].verdict = Verdict::kDroppedFunctional;
    pairs[1].doc_id = "d1";
    pairs[1].offset = 1;

    const std::string path = "pairs_test.jsonl";
    save_pairs(pairs, vocab, path, R"({"config_hash":"abc"})");
    const std::vector<ContextTargetPair> loaded = load_pairs(path, vocab);
    REQUIRE(loaded.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(loaded[i].context == pairs[i].context);
        CHECK(loaded[i].gold == pairs[i].gold);
        CHECK(loaded[i].verdict == pairs[i].verdict);
        CHECK(loaded[i].doc_id == pairs[i].doc_id);
        CHECK(loaded[i].offset == pairs[i].offset);
    }
    std::filesystem::remove(path);

    std::vector<EvalInstance> instances(1);
    instances[0].context = encode("a b", vocab);
    instances[0].candidates = {*vocab.find("c"), *vocab.find("d")};
    instances[0].gold_index = 1;
    const std::string eval_path = "eval_test.jsonl";
    save_eval_instances(instances, vocab, eval_path, R"({"config_hash":"abc"})");
    const std::vector<EvalInstance> loaded_instances = load_eval_instances(eval_path, vocab);
    REQUIRE(loaded_instances.size() == 1);
    CHECK(loaded_instances[0].context == instances[0].context);
    CHECK(loaded_instances[0].candidates == instances[0].candidates);
    CHECK(loaded_instances[0].gold_index == 1);
    std::filesystem::remove(eval_path);
}
