#include "bow/loglinear.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bow/distribution.hpp"
#include "bow/errors.hpp"

namespace bow {

namespace {

std::uint64_t fnv1a_mix(std::uint64_t x, std::uint64_t value) {
    x ^= value;
    x *= 0x100000001b3ULL;
    return x;
}

}  // namespace

LogLinearModel::LogLinearModel(std::size_t feature_count, std::size_t vocab_size,
                               std::size_t window_length)
    : feature_count_(feature_count),
      vocab_size_(vocab_size),
      window_length_(window_length),
      weights_(feature_count * vocab_size, 0.0) {
    if (feature_count == 0 || vocab_size == 0) {
        throw Error("log-linear model needs nonzero feature count and vocabulary size");
    }
}

std::string LogLinearModel::extractor_id() const {
    return "hashed-window:" + std::to_string(window_length_);
}

std::vector<std::size_t> LogLinearModel::active_features(const TokenSequence& context) const {
    std::vector<std::size_t> active;
    active.reserve(window_length_ + 1);
    for (std::size_t len = 0; len <= window_length_; ++len) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        h = fnv1a_mix(h, static_cast<std::uint64_t>(len) + 1);
        const std::size_t take = std::min(len, context.size());
        for (std::size_t i = context.size() - take; i < context.size(); ++i) {
            h = fnv1a_mix(h, static_cast<std::uint64_t>(context[i]) + 1);
        }
        active.push_back(static_cast<std::size_t>(h % feature_count_));
    }
    return active;
}

std::vector<double> LogLinearModel::scores(const TokenSequence& context) const {
    std::vector<double> out(vocab_size_, 0.0);
    for (std::size_t f : active_features(context)) {
        const double* row = weights_.data() + f * vocab_size_;
        for (std::size_t w = 0; w < vocab_size_; ++w) out[w] += row[w];
    }
    return out;
}

std::vector<double> LogLinearModel::grad_log_prob(const TokenSequence& context, TokenId token,
                                                  double temperature) const {
    std::vector<double> grad(weights_.size(), 0.0);
    accumulate_grad_log_prob(context, token, temperature, 1.0, grad);
    return grad;
}

void LogLinearModel::accumulate_grad_log_prob(const TokenSequence& context, TokenId token,
                                              double temperature, double scale,
                                              std::vector<double>& buffer) const {
    if (buffer.size() != weights_.size()) throw ShapeMismatchError(weights_.size(), buffer.size());
    if (token >= vocab_size_) throw IndexOutOfRangeError(token, vocab_size_);
    const TokenDistribution pi = softmax(scores(context), temperature);
    const double inv_t = scale / temperature;
    for (std::size_t f : active_features(context)) {
        double* row = buffer.data() + f * vocab_size_;
        row[token] += inv_t;
        for (std::size_t w = 0; w < vocab_size_; ++w) row[w] -= pi.probs[w] * inv_t;
    }
}

void save_checkpoint(const LogLinearModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UnreadablePathError(path);
    out << "bow-checkpoint v1\n";
    out << model.feature_count() << ' ' << model.vocab_size() << '\n';
    char buf[64];
    for (double w : model.weights()) {
        std::snprintf(buf, sizeof(buf), "%.17g", w);
        out << buf << '\n';
    }
}

LogLinearModel load_checkpoint(const std::string& path, std::size_t window_length) {
    std::ifstream in(path);
    if (!in) throw UnreadablePathError(path);
    std::string header;
    std::getline(in, header);
    if (header != "bow-checkpoint v1") throw Error("bad checkpoint header: '" + header + "'");
    std::size_t feature_count = 0;
    std::size_t vocab_size = 0;
    in >> feature_count >> vocab_size;
    if (!in || feature_count == 0 || vocab_size == 0) throw Error("bad checkpoint dimensions");
    LogLinearModel model(feature_count, vocab_size, window_length);
    auto& weights = model.mutable_weights();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(in >> weights[i])) throw Error("checkpoint truncated at weight " + std::to_string(i));
        if (!std::isfinite(weights[i])) throw Error("non-finite checkpoint weight");
    }
    return model;
}

}  // namespace bow
