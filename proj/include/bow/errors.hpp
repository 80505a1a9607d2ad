#pragma once

#include <stdexcept>
#include <string>

namespace bow {

// Base class for all library errors. The CLI catches this and prints a
// one-line diagnostic; tests match on the concrete type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownTokenError : Error {
    explicit UnknownTokenError(const std::string& unit)
        : Error("unknown token: '" + unit + "'"), unit(unit) {}
    std::string unit;
};

struct IndexOutOfRangeError : Error {
    IndexOutOfRangeError(std::size_t id, std::size_t vocab_size)
        : Error("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                std::to_string(vocab_size)) {}
};

struct NonPositiveTemperatureError : Error {
    explicit NonPositiveTemperatureError(double t)
        : Error("temperature must be > 0, got " + std::to_string(t)) {}
};

struct EmptyCorpusError : Error {
    EmptyCorpusError() : Error("corpus is empty") {}
};

struct GroupTooSmallError : Error {
    explicit GroupTooSmallError(std::size_t n)
        : Error("reward group needs at least 2 members, got " + std::to_string(n)) {}
};

struct ShapeMismatchError : Error {
    ShapeMismatchError(std::size_t expected, std::size_t got)
        : Error("shape mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

struct GoldOutOfVocabularyError : Error {
    explicit GoldOutOfVocabularyError(std::size_t id)
        : Error("gold token id " + std::to_string(id) + " outside vocabulary") {}
};

struct CandidateOutOfVocabularyError : Error {
    explicit CandidateOutOfVocabularyError(std::size_t id)
        : Error("candidate token id " + std::to_string(id) + " outside vocabulary") {}
};

struct NonFiniteLossError : Error {
    explicit NonFiniteLossError(const std::string& diagnostic)
        : Error("non-finite loss: " + diagnostic) {}
};

struct MalformedRecordError : Error {
    explicit MalformedRecordError(std::size_t line, const std::string& why)
        : Error("malformed record at line " + std::to_string(line) + ": " + why), line(line) {}
    std::size_t line;
};

struct UnreadablePathError : Error {
    explicit UnreadablePathError(const std::string& path)
        : Error("cannot read: " + path) {}
};

struct CountTooLargeError : Error {
    CountTooLargeError(std::size_t count, std::size_t available)
        : Error("requested " + std::to_string(count) + " items from a pool of " +
                std::to_string(available)) {}
};

struct SpecTooLargeError : Error {
    explicit SpecTooLargeError(std::size_t vocab)
        : Error("synthetic environment vocabulary would be " + std::to_string(vocab) +
                " tokens; the limit is 512") {}
};

struct EmptySelectionError : Error {
    EmptySelectionError() : Error("no kept pairs to train on") {}
};

struct RemoteUnavailableError : Error {
    explicit RemoteUnavailableError(const std::string& why)
        : Error("remote endpoint unavailable: " + why) {}
};

struct MalformedResponseError : Error {
    explicit MalformedResponseError(const std::string& why)
        : Error("malformed endpoint response: " + why) {}
};

struct TimeoutExceededError : Error {
    explicit TimeoutExceededError(const std::string& why)
        : Error("request timed out: " + why) {}
};

struct UnparseableJudgmentError : Error {
    explicit UnparseableJudgmentError(const std::string& body)
        : Error("unparseable filter judgment: " + body) {}
};

struct UnknownKeyError : Error {
    explicit UnknownKeyError(const std::string& key)
        : Error("unknown config key: '" + key + "'"), key(key) {}
    std::string key;
};

struct ConfigTypeError : Error {
    ConfigTypeError(const std::string& key, const std::string& value)
        : Error("config key '" + key + "' cannot parse value '" + value + "'"), key(key) {}
    std::string key;
};

struct MissingPathError : Error {
    explicit MissingPathError(const std::string& path)
        : Error("required path does not exist: " + path) {}
};

}  // namespace bow
