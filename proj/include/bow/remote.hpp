#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "bow/reward_types.hpp"

namespace bow {

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string model = "default";
    double timeout_seconds = 30.0;
    std::size_t max_concurrent = 1;
    std::size_t retry_limit = 3;
    std::size_t top_k_logprobs = 100;
    std::size_t backoff_initial_ms = 50;

    void validate() const;
};

struct CompletionRequest {
    std::string model;
    std::string prompt;
    std::size_t max_tokens = 16;
    double temperature = 1.0;
    std::size_t logprobs = 100;
};

struct LogprobEntry {
    std::string token;
    double logprob = 0.0;
};

struct LogprobPosition {
    std::string token;
    std::vector<LogprobEntry> top;  // sorted by descending log-probability
};

struct LogprobResponse {
    std::string text;
    std::vector<LogprobPosition> positions;
};

// Wire helpers; the request/response JSON schema is the external interface.
std::string request_to_json(const CompletionRequest& request);
std::string response_to_json(const LogprobResponse& response);
LogprobResponse response_from_json(const std::string& body);

// FNV-1a over the canonical request JSON; the cassette lookup key.
std::uint64_t request_hash(const CompletionRequest& request);

// Anything that can answer a completion request: the HTTP client, a replay
// cassette, or a test double.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual LogprobResponse complete(const CompletionRequest& request) = 0;
};

// JSON-over-HTTP client with exponential backoff. Each transport failure
// consumes one of retry_limit attempts; exhaustion surfaces as
// RemoteUnavailableError (or TimeoutExceededError when the last failure was
// a timeout). The endpoint credential is read from BOW_ENDPOINT_TOKEN only.
class HttpCompletionClient : public CompletionClient {
public:
    explicit HttpCompletionClient(EndpointConfig cfg);
    LogprobResponse complete(const CompletionRequest& request) override;

    const EndpointConfig& config() const { return cfg_; }

private:
    EndpointConfig cfg_;
};

// Passes requests through and appends (request hash, response) JSON lines.
class RecordingClient : public CompletionClient {
public:
    RecordingClient(CompletionClient& inner, std::string cassette_path);
    LogprobResponse complete(const CompletionRequest& request) override;

private:
    CompletionClient& inner_;
    std::string cassette_path_;
};

// Answers requests from a cassette; a miss is RemoteUnavailableError, never
// a silently fabricated response.
class ReplayClient : public CompletionClient {
public:
    explicit ReplayClient(const std::string& cassette_path);
    LogprobResponse complete(const CompletionRequest& request) override;

private:
    std::unordered_map<std::uint64_t, LogprobResponse> responses_;
};

// One-shot form of the client: builds it, sends, returns the response.
LogprobResponse complete_with_logprobs(const EndpointConfig& cfg, const std::string& prompt,
                                       std::size_t max_tokens, double temperature);

// First-position alternatives exponentiated and renormalized over the
// returned set: the truncated judge distribution, as (token, probability)
// pairs in the response order.
std::vector<std::pair<std::string, double>> truncated_distribution(const LogprobResponse& response);

// Reward from two logprob responses (trajectory-conditioned and
// context-conditioned). Raw probabilities exp(logprob) are used on both
// sides: the endpoint's top-k acts as the top-K cutoff, so the base reward
// is the gold token's actual probability whenever it appears in the
// trajectory response's alternatives, and 0 otherwise; the penalty support
// is the reference response's alternatives.
RewardBreakdown reward_from_responses(const LogprobResponse& trajectory_response,
                                      const LogprobResponse& reference_response,
                                      const std::string& gold_first_token, double alpha);

}  // namespace bow
