#pragma once

#include <cstddef>
#include <optional>

namespace bow {

struct RewardConfig {
    double judge_temperature = 5.0;
    std::size_t top_k = 100;
    double alpha = 0.1;

    void validate() const;
};

// Per-trajectory reward decomposition: base is the judge probability of the
// gold token (zeroed outside the top-K), penalty the L1 distance to the
// reference distribution over its top-K support, final = base - alpha * penalty.
struct RewardBreakdown {
    double base = 0.0;
    double penalty = 0.0;
    double final_reward = 0.0;
    std::optional<std::size_t> gold_rank;  // 1-based; absent if gold missing from the support
};

}  // namespace bow
