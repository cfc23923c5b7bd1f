#pragma once

// HTTP transport for score_corpus, kept in its own header so the bulky
// httplib dependency is only compiled where live scoring is actually used.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "raterlab/llmscore.hpp"

namespace raterlab {

// One chat-completion call returning the top logprobs of the first generated
// token, with exponential-backoff retries.
inline ResponseCache::TokenLogprobs http_fetch_logprobs(const EndpointConfig& config,
                                                        const std::string& prompt) {
    auto url = detail::parse_base_url(config.base_url);
    std::string path = url.prefix + "/chat/completions";

    nlohmann::json body;
    body["model"] = config.model;
    body["messages"] = nlohmann::json::array(
        {nlohmann::json{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config.temperature;
    body["max_tokens"] = 1;
    body["logprobs"] = true;
    body["top_logprobs"] = config.top_logprobs;
    std::string payload = body.dump();

    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str());
            key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt < std::max(config.max_attempts, 1); ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::duration<double>(
                config.backoff_initial_s * std::pow(2.0, attempt - 1));
            std::this_thread::sleep_for(
                std::chrono::duration_cast<std::chrono::milliseconds>(delay));
        }
        httplib::Client client(url.origin);
        client.set_connection_timeout(config.timeout_s, 0);
        client.set_read_timeout(config.timeout_s, 0);
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            auto json = nlohmann::json::parse(res->body);
            const auto& top = json.at("choices").at(0).at("logprobs").at("content")
                                  .at(0).at("top_logprobs");
            ResponseCache::TokenLogprobs out;
            for (const auto& entry : top)
                out.emplace_back(entry.at("token").get<std::string>(),
                                 entry.at("logprob").get<double>());
            return out;
        } catch (const nlohmann::json::exception& ex) {
            last_error = std::string("unexpected response shape: ") + ex.what();
            continue;
        }
    }
    throw TransportError("scoring request failed after " +
                         std::to_string(std::max(config.max_attempts, 1)) +
                         " attempts: " + last_error);
}

inline FetchFn http_fetcher() {
    return [](const EndpointConfig& c, const std::string& p) {
        return http_fetch_logprobs(c, p);
    };
}

} // namespace raterlab
