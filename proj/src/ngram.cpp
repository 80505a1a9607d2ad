#include "bow/ngram.hpp"

#include <cmath>

#include "bow/errors.hpp"

namespace bow {

namespace {

TokenSequence history_of(const TokenSequence& tokens, std::size_t position, std::size_t order) {
    const std::size_t len = std::min(position, order - 1);
    return TokenSequence(tokens.begin() + static_cast<std::ptrdiff_t>(position - len),
                         tokens.begin() + static_cast<std::ptrdiff_t>(position));
}

}  // namespace

std::vector<double> NGramModel::scores(const TokenSequence& context) const {
    const TokenSequence history = history_of(context, context.size(), order_);
    std::vector<double> out(vocab_size_, std::log(smoothing_));
    auto it = counts_.find(history);
    if (it != counts_.end()) {
        for (const auto& [token, count] : it->second) {
            out[token] = std::log(static_cast<double>(count) + smoothing_);
        }
    }
    return out;
}

std::uint64_t NGramModel::count(const TokenSequence& history, TokenId token) const {
    auto it = counts_.find(history);
    if (it == counts_.end()) return 0;
    auto jt = it->second.find(token);
    return jt == it->second.end() ? 0 : jt->second;
}

NGramModel fit_ngram(const std::vector<TokenSequence>& corpus, std::size_t order, double smoothing,
                     std::size_t vocab_size) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    if (!(smoothing > 0.0)) throw Error("smoothing constant must be > 0");
    bool any_token = false;
    for (const auto& seq : corpus) {
        if (!seq.empty()) {
            any_token = true;
            break;
        }
    }
    if (!any_token) throw EmptyCorpusError();

    NGramModel model;
    model.order_ = order;
    model.smoothing_ = smoothing;
    model.vocab_size_ = vocab_size;
    for (const auto& seq : corpus) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i] >= vocab_size) throw IndexOutOfRangeError(seq[i], vocab_size);
            model.counts_[history_of(seq, i, order)][seq[i]] += 1;
        }
    }
    return model;
}

}  // namespace bow
