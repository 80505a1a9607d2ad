#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bow/loglinear.hpp"
#include "bow/ngram.hpp"
#include "bow/rng.hpp"
#include "bow/vocab.hpp"

namespace bowtest {

// Small vocabulary with the required markers plus a few plain words.
inline bow::Vocabulary tiny_vocab() {
    return bow::Vocabulary({"<bos>", "<eos>", "<reason>", "<box>", "a", "b", "c", "d"});
}

// Gradient check helper: relative error with an absolute floor so exact-zero
// entries (inactive features) and near-zero noise do not blow it up.
inline bool grad_close(double analytic, double numeric, double rel_tol = 1e-4,
                       double abs_floor = 1e-8) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= abs_floor) return true;
    return diff <= rel_tol * std::max(std::abs(analytic), std::abs(numeric));
}

// Random log-linear model with small weights (keeps softmax in a smooth,
// well-conditioned region for finite differences).
inline bow::LogLinearModel random_model(std::size_t features, std::size_t vocab_size,
                                        std::size_t window, bow::Rng& rng) {
    bow::LogLinearModel model(features, vocab_size, window);
    for (double& w : model.mutable_weights()) w = (rng.next_double() - 0.5) * 2.0;
    return model;
}

inline bow::TokenSequence random_context(std::size_t vocab_size, std::size_t length,
                                         bow::Rng& rng) {
    bow::TokenSequence ctx;
    for (std::size_t i = 0; i < length; ++i) ctx.push_back(rng.next_below(vocab_size));
    return ctx;
}

}  // namespace bowtest
