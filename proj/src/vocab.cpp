#include "bow/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bow/errors.hpp"

namespace bow {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 4) {
        throw Error("vocabulary needs at least 4 tokens, got " + std::to_string(tokens_.size()));
    }
    index_.reserve(tokens_.size());
    for (TokenId id = 0; id < tokens_.size(); ++id) {
        auto [it, inserted] = index_.emplace(tokens_[id], id);
        if (!inserted) {
            throw Error("duplicate token in vocabulary: '" + tokens_[id] + "'");
        }
    }
    auto require = [&](const char* marker) {
        auto it = index_.find(marker);
        if (it == index_.end()) {
            throw Error(std::string("vocabulary is missing required marker ") + marker);
        }
        return it->second;
    };
    bos_ = require(markers::kBos);
    eos_ = require(markers::kEos);
    reason_start_ = require(markers::kReasonStart);
    if (auto it = index_.find(markers::kBoxOpen); it != index_.end()) {
        box_open_ = it->second;
    }
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) throw IndexOutOfRangeError(id, tokens_.size());
    return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> split_units(const std::string& text) {
    std::vector<std::string> units;
    std::istringstream in(text);
    std::string unit;
    while (in >> unit) units.push_back(unit);
    return units;
}

TokenSequence encode(const std::string& text, const Vocabulary& vocab) {
    TokenSequence ids;
    for (const auto& unit : split_units(text)) {
        auto id = vocab.find(unit);
        if (!id) throw UnknownTokenError(unit);
        ids.push_back(*id);
    }
    return ids;
}

std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i > 0) out += ' ';
        out += vocab.token(seq[i]);
    }
    return out;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UnreadablePathError(path);
    // Special markers first, then the remaining tokens in vocabulary order.
    std::vector<std::string> specials = {markers::kBos, markers::kEos, markers::kReasonStart};
    if (vocab.box_open()) specials.push_back(markers::kBoxOpen);
    for (const auto& s : specials) out << s << '\n';
    for (const auto& t : vocab.tokens()) {
        if (std::find(specials.begin(), specials.end(), t) == specials.end()) out << t << '\n';
    }
}

Vocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UnreadablePathError(path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
}

}  // namespace bow
