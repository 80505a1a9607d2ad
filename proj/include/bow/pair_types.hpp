#pragma once

#include <optional>
#include <string>

#include "bow/vocab.hpp"

namespace bow {

enum class Verdict {
    kKept,
    kDroppedFunctional,
    kDroppedDeterministic,
    kDroppedNoLatent,
};

std::string verdict_name(Verdict v);
std::optional<Verdict> verdict_from_name(const std::string& name);

// Classifier output for one pair, mirroring the JSON object the filtering
// prompt requests: {"requires_reasoning": bool, "explanation": string}.
struct FilterDecision {
    bool requires_reasoning = false;
    std::string explanation;
};

// A context and its gold next word. The gold word is reward-side information
// only; no prompt construction path may read it.
struct ContextTargetPair {
    TokenSequence context;
    TokenId gold = 0;
    Verdict verdict = Verdict::kKept;
    std::string doc_id;
    std::size_t offset = 0;
    std::optional<FilterDecision> decision;
};

}  // namespace bow
