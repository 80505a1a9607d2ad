#pragma once

#include <string>
#include <vector>

#include "bow/vocab.hpp"

namespace bow {

// Trainable log-linear policy. The score of candidate token w given a context
// is the sum of weights at (f, w) over the active context features f, where
// features are hashed history windows of length 0..window_length (the empty
// window acts as a bias bucket). Exact gradients of log-probabilities are
// available in closed form, which keeps every update step checkable against
// finite differences.
class LogLinearModel {
public:
    LogLinearModel(std::size_t feature_count, std::size_t vocab_size,
                   std::size_t window_length = 3);

    std::size_t feature_count() const { return feature_count_; }
    std::size_t vocab_size() const { return vocab_size_; }
    std::size_t window_length() const { return window_length_; }
    std::string extractor_id() const;

    // Row-major (feature, token) weight matrix, length feature_count * vocab_size.
    const std::vector<double>& weights() const { return weights_; }
    std::vector<double>& mutable_weights() { return weights_; }

    // Hashed feature indices active for this context; window_length + 1 entries.
    std::vector<std::size_t> active_features(const TokenSequence& context) const;

    std::vector<double> scores(const TokenSequence& context) const;

    // Analytic gradient of log pi(token | context) with respect to the full
    // weight vector: (phi(context, token) - E_{w~pi}[phi(context, w)]) / T.
    std::vector<double> grad_log_prob(const TokenSequence& context, TokenId token,
                                      double temperature) const;

    // Adds scale * grad log pi(token | context) into buffer (same length as
    // weights). The training loop uses this to avoid per-sample allocations.
    void accumulate_grad_log_prob(const TokenSequence& context, TokenId token, double temperature,
                                  double scale, std::vector<double>& buffer) const;

private:
    std::size_t feature_count_;
    std::size_t vocab_size_;
    std::size_t window_length_;
    std::vector<double> weights_;
};

// Text checkpoint: "bow-checkpoint v1", then "feature_count vocab_size", then
// one weight per line in row-major (feature, token) order.
void save_checkpoint(const LogLinearModel& model, const std::string& path);
LogLinearModel load_checkpoint(const std::string& path, std::size_t window_length = 3);

}  // namespace bow
