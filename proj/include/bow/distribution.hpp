#pragma once

#include <cstddef>
#include <vector>

#include "bow/vocab.hpp"

namespace bow {

// Probability vector over the vocabulary: entries nonnegative, summing to 1
// within 1e-6. Returned by every model query in the project.
struct TokenDistribution {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](TokenId id) const { return probs[id]; }

    // Throws Error if the invariants do not hold.
    void validate() const;
};

// softmax(scores / temperature). Temperature acts on the pre-softmax scores.
// Throws NonPositiveTemperatureError.
TokenDistribution softmax(const std::vector<double>& scores, double temperature);

// Shannon entropy in nats; 0 log 0 taken as 0.
double entropy(const TokenDistribution& dist);

// Token ids sorted by descending probability, ties broken by lower id.
// Used for rank queries and top-K support selection.
std::vector<TokenId> ranked_tokens(const TokenDistribution& dist);

}  // namespace bow
