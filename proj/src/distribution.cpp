#include "bow/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bow/errors.hpp"

namespace bow {

void TokenDistribution::validate() const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw Error("distribution entry negative or NaN");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw Error("distribution sums to " + std::to_string(sum) + ", expected 1");
    }
}

TokenDistribution softmax(const std::vector<double>& scores, double temperature) {
    if (!(temperature > 0.0)) throw NonPositiveTemperatureError(temperature);
    TokenDistribution dist;
    dist.probs.resize(scores.size());
    const double max_score = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        dist.probs[i] = std::exp((scores[i] - max_score) / temperature);
        sum += dist.probs[i];
    }
    for (double& p : dist.probs) p /= sum;
    return dist;
}

double entropy(const TokenDistribution& dist) {
    double h = 0.0;
    for (double p : dist.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

std::vector<TokenId> ranked_tokens(const TokenDistribution& dist) {
    std::vector<TokenId> ids(dist.size());
    std::iota(ids.begin(), ids.end(), TokenId{0});
    std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) {
        if (dist.probs[a] != dist.probs[b]) return dist.probs[a] > dist.probs[b];
        return a < b;
    });
    return ids;
}

}  // namespace bow
