#pragma once

#include <vector>

#include "bow/vocab.hpp"

namespace bow {

// Multiple-choice next-word instance: a context, at least two distinct
// single-word candidates, and the index of the gold one.
struct EvalInstance {
    TokenSequence context;
    std::vector<TokenId> candidates;
    std::size_t gold_index = 0;

    void validate() const;
};

// Outcome of one self-consistency evaluation: per-sample votes and the
// majority prediction (ties resolved toward the lowest candidate index).
struct EvalOutcome {
    std::vector<std::size_t> votes;
    std::size_t prediction = 0;
    bool correct = false;
};

// Majority with lowest-index tie-break; used by every prediction path.
std::size_t majority_vote(const std::vector<std::size_t>& votes, std::size_t num_candidates);

}  // namespace bow
