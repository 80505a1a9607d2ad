#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace bow {

using TokenId = std::size_t;

// Token indices into a Vocabulary. Context windows and trajectories are both
// plain token sequences.
using TokenSequence = std::vector<TokenId>;

namespace markers {
// Special marker strings. BOS/EOS/REASON_START are required members of every
// vocabulary; BOX opens an explicit next-word guess and is only required by
// the no-judge path.
inline constexpr const char* kBos = "<bos>";
inline constexpr const char* kEos = "<eos>";
inline constexpr const char* kReasonStart = "<reason>";
inline constexpr const char* kBoxOpen = "<box>";
}  // namespace markers

// Ordered set of distinct token strings with the special markers as members.
// Word-level: one token per whitespace-delimited unit.
class Vocabulary {
public:
    // Tokens must be unique and contain the three required markers.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(TokenId id) const;
    std::optional<TokenId> find(const std::string& token) const;
    bool contains(const std::string& token) const { return find(token).has_value(); }

    TokenId bos() const { return bos_; }
    TokenId eos() const { return eos_; }
    TokenId reason_start() const { return reason_start_; }
    // Present only when the vocabulary carries the box-open marker.
    std::optional<TokenId> box_open() const { return box_open_; }

    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    TokenId bos_ = 0;
    TokenId eos_ = 0;
    TokenId reason_start_ = 0;
    std::optional<TokenId> box_open_;
};

// Whitespace tokenization against the vocabulary. Throws UnknownTokenError
// for units outside it.
TokenSequence encode(const std::string& text, const Vocabulary& vocab);

// Inverse of encode: space-joined token strings. Throws IndexOutOfRangeError.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);

// Splits on runs of whitespace; no vocabulary lookup.
std::vector<std::string> split_units(const std::string& text);

// One token per line, UTF-8, special markers first.
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

}  // namespace bow
