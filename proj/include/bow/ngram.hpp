#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "bow/vocab.hpp"

namespace bow {

// Add-s smoothed n-gram model over token ids. Frozen after fitting: the only
// way to obtain one is fit_ngram, and queries are const. Serves as the judge
// backend, so its distributions must be deterministic and recount-checkable.
class NGramModel {
public:
    std::size_t order() const { return order_; }
    double smoothing() const { return smoothing_; }
    std::size_t vocab_size() const { return vocab_size_; }

    // Pre-softmax scores: ln(count + s) per token, under the history made of
    // the last order-1 context tokens. softmax at temperature 1 therefore
    // reproduces the add-s estimate (count + s) / (total + s * |V|) exactly.
    std::vector<double> scores(const TokenSequence& context) const;

    // Exact count for a (history, token) pair; 0 when unseen.
    std::uint64_t count(const TokenSequence& history, TokenId token) const;

private:
    friend NGramModel fit_ngram(const std::vector<TokenSequence>& corpus, std::size_t order,
                                double smoothing, std::size_t vocab_size);

    struct HistoryHash {
        std::size_t operator()(const TokenSequence& h) const {
            std::uint64_t x = 0xcbf29ce484222325ULL;
            for (TokenId id : h) {
                x ^= static_cast<std::uint64_t>(id) + 1;
                x *= 0x100000001b3ULL;
            }
            return static_cast<std::size_t>(x);
        }
    };

    std::size_t order_ = 1;
    double smoothing_ = 0.1;
    std::size_t vocab_size_ = 0;
    std::unordered_map<TokenSequence, std::unordered_map<TokenId, std::uint64_t>, HistoryHash>
        counts_;
};

// Exact n-gram counting over the corpus. Every position of every sequence is
// counted once, under the history of up to order-1 preceding tokens (shorter
// at sequence starts). Throws EmptyCorpusError when the corpus has no tokens.
NGramModel fit_ngram(const std::vector<TokenSequence>& corpus, std::size_t order, double smoothing,
                     std::size_t vocab_size);

}  // namespace bow
