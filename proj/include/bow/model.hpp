#pragma once

#include <cmath>

#include "bow/distribution.hpp"
#include "bow/errors.hpp"
#include "bow/rng.hpp"
#include "bow/vocab.hpp"

namespace bow {

// Shared inference surface for both backends (frozen n-gram judge, trainable
// log-linear policy). A model only has to expose scores(context) and
// vocab_size(); everything else is derived here so the temperature and
// sampling semantics cannot drift between backends.

template <class Model>
TokenDistribution next_token_distribution(const Model& model, const TokenSequence& context,
                                          double temperature) {
    return softmax(model.scores(context), temperature);
}

// Sum of per-token log probabilities of the continuation, applied
// autoregressively after the context. Empty continuation yields 0.
template <class Model>
double sequence_log_prob(const Model& model, const TokenSequence& context,
                         const TokenSequence& continuation, double temperature) {
    TokenSequence prefix = context;
    double total = 0.0;
    for (TokenId token : continuation) {
        const TokenDistribution dist = next_token_distribution(model, prefix, temperature);
        if (token >= dist.size()) throw IndexOutOfRangeError(token, dist.size());
        total += std::log(dist[token]);
        prefix.push_back(token);
    }
    return total;
}

// Inverse-CDF draw over token ids in id order, so results depend only on the
// rng stream and the distribution, not on any container ordering.
template <class Model>
TokenId sample_next(const Model& model, const TokenSequence& context, double temperature,
                    Rng& rng) {
    const TokenDistribution dist = next_token_distribution(model, context, temperature);
    const double u = rng.next_double();
    double cum = 0.0;
    for (TokenId id = 0; id < dist.size(); ++id) {
        cum += dist[id];
        if (u < cum) return id;
    }
    return dist.size() - 1;  // guard against rounding at the top of the CDF
}

}  // namespace bow
