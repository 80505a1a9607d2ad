#include "bow/remote.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bow/errors.hpp"

namespace bow {

using nlohmann::json;

namespace {
constexpr const char* kCompletionPath = "/v1/completions";
}

void EndpointConfig::validate() const {
    if (base_url.empty()) throw Error("endpoint base URL must be set");
    if (max_concurrent < 1) throw Error("endpoint concurrency must be >= 1");
    if (top_k_logprobs < 1) throw Error("top-k logprobs must be >= 1");
    if (retry_limit < 1) throw Error("retry limit must be >= 1");
    if (!(timeout_seconds > 0.0)) throw Error("timeout must be > 0");
}

std::string request_to_json(const CompletionRequest& request) {
    return json{{"model", request.model},
                {"prompt", request.prompt},
                {"max_tokens", request.max_tokens},
                {"temperature", request.temperature},
                {"logprobs", request.logprobs}}
        .dump();
}

std::string response_to_json(const LogprobResponse& response) {
    json positions = json::array();
    for (const LogprobPosition& pos : response.positions) {
        json top = json::array();
        for (const LogprobEntry& entry : pos.top) {
            top.push_back({{"token", entry.token}, {"logprob", entry.logprob}});
        }
        positions.push_back({{"token", pos.token}, {"top", top}});
    }
    return json{{"text", response.text}, {"positions", positions}}.dump();
}

LogprobResponse response_from_json(const std::string& body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponseError(e.what());
    }
    try {
        LogprobResponse response;
        response.text = parsed.at("text").get<std::string>();
        for (const auto& pos : parsed.at("positions")) {
            LogprobPosition position;
            position.token = pos.at("token").get<std::string>();
            for (const auto& entry : pos.at("top")) {
                position.top.push_back({entry.at("token").get<std::string>(),
                                        entry.at("logprob").get<double>()});
            }
            if (position.top.empty()) throw MalformedResponseError("empty alternatives");
            for (std::size_t i = 1; i < position.top.size(); ++i) {
                if (position.top[i].logprob > position.top[i - 1].logprob) {
                    throw MalformedResponseError("alternatives not sorted by logprob");
                }
            }
            response.positions.push_back(std::move(position));
        }
        return response;
    } catch (const json::exception& e) {
        throw MalformedResponseError(e.what());
    }
}

std::uint64_t request_hash(const CompletionRequest& request) {
    const std::string canonical = request_to_json(request);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

HttpCompletionClient::HttpCompletionClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
}

LogprobResponse HttpCompletionClient::complete(const CompletionRequest& request) {
    std::string last_error;
    bool last_was_timeout = false;
    std::size_t backoff_ms = cfg_.backoff_initial_ms;

    for (std::size_t attempt = 0; attempt < cfg_.retry_limit; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(cfg_.base_url);
        const auto timeout = std::chrono::milliseconds(
            static_cast<long long>(cfg_.timeout_seconds * 1000.0));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        if (const char* token = std::getenv("BOW_ENDPOINT_TOKEN")) {
            client.set_default_headers({{"Authorization", std::string("Bearer ") + token}});
        }

        httplib::Result result =
            client.Post(kCompletionPath, request_to_json(request), "application/json");
        if (!result) {
            last_was_timeout = result.error() == httplib::Error::ConnectionTimeout ||
                               result.error() == httplib::Error::Read ||
                               result.error() == httplib::Error::Write;
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (result->status != 200) {
            last_was_timeout = false;
            last_error = "HTTP status " + std::to_string(result->status);
            continue;
        }
        return response_from_json(result->body);
    }

    if (last_was_timeout) throw TimeoutExceededError(last_error);
    throw RemoteUnavailableError(last_error + " after " + std::to_string(cfg_.retry_limit) +
                                 " attempts");
}

RecordingClient::RecordingClient(CompletionClient& inner, std::string cassette_path)
    : inner_(inner), cassette_path_(std::move(cassette_path)) {}

LogprobResponse RecordingClient::complete(const CompletionRequest& request) {
    LogprobResponse response = inner_.complete(request);
    std::ofstream out(cassette_path_, std::ios::app);
    if (!out) throw UnreadablePathError(cassette_path_);
    out << json{{"request_hash", request_hash(request)},
                {"response", json::parse(response_to_json(response))}}
               .dump()
        << '\n';
    return response;
}

ReplayClient::ReplayClient(const std::string& cassette_path) {
    std::ifstream in(cassette_path);
    if (!in) throw UnreadablePathError(cassette_path);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            const json record = json::parse(line);
            responses_[record.at("request_hash").get<std::uint64_t>()] =
                response_from_json(record.at("response").dump());
        } catch (const json::exception& e) {
            throw MalformedRecordError(line_number, e.what());
        }
    }
}

LogprobResponse ReplayClient::complete(const CompletionRequest& request) {
    auto it = responses_.find(request_hash(request));
    if (it == responses_.end()) {
        throw RemoteUnavailableError("no cassette entry for this request");
    }
    return it->second;
}

LogprobResponse complete_with_logprobs(const EndpointConfig& cfg, const std::string& prompt,
                                       std::size_t max_tokens, double temperature) {
    HttpCompletionClient client(cfg);
    CompletionRequest request;
    request.model = cfg.model;
    request.prompt = prompt;
    request.max_tokens = max_tokens;
    request.temperature = temperature;
    request.logprobs = cfg.top_k_logprobs;
    return client.complete(request);
}

std::vector<std::pair<std::string, double>> truncated_distribution(
    const LogprobResponse& response) {
    if (response.positions.empty()) throw MalformedResponseError("response has no positions");
    const LogprobPosition& first = response.positions.front();
    std::vector<std::pair<std::string, double>> dist;
    dist.reserve(first.top.size());
    double total = 0.0;
    for (const LogprobEntry& entry : first.top) {
        const double p = std::exp(entry.logprob);
        dist.emplace_back(entry.token, p);
        total += p;
    }
    for (auto& [token, p] : dist) p /= total;
    return dist;
}

RewardBreakdown reward_from_responses(const LogprobResponse& trajectory_response,
                                      const LogprobResponse& reference_response,
                                      const std::string& gold_first_token, double alpha) {
    if (trajectory_response.positions.empty() || reference_response.positions.empty()) {
        throw MalformedResponseError("response has no positions");
    }
    const auto& tau_top = trajectory_response.positions.front().top;
    const auto& ref_top = reference_response.positions.front().top;

    RewardBreakdown out;
    std::unordered_map<std::string, double> tau_probs;
    for (std::size_t i = 0; i < tau_top.size(); ++i) {
        tau_probs.emplace(tau_top[i].token, std::exp(tau_top[i].logprob));
        if (tau_top[i].token == gold_first_token && !out.gold_rank) {
            out.gold_rank = i + 1;
            out.base = std::exp(tau_top[i].logprob);
        }
    }

    // L1 over the reference's returned alternatives; tokens the trajectory
    // response did not list contribute their full reference probability.
    for (const LogprobEntry& entry : ref_top) {
        const double ref_p = std::exp(entry.logprob);
        const auto it = tau_probs.find(entry.token);
        const double tau_p = it == tau_probs.end() ? 0.0 : it->second;
        out.penalty += std::abs(tau_p - ref_p);
    }
    out.final_reward = out.base - alpha * out.penalty;
    return out;
}

}  // namespace bow
