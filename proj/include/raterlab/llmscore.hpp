#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "raterlab/io.hpp"
#include "raterlab/predictions.hpp"
#include "raterlab/prompts.hpp"

namespace raterlab {

// Probability distribution over the ten prompt levels 0..9 for one
// (essay, aspect) pair.
struct ScoreDistribution {
    enum class Source { Live, Recorded };

    std::string essay_id;
    Aspect aspect = Aspect::Holistic;
    std::array<double, 10> p{};
    Source source = Source::Recorded;
};

// Collect digit-token probabilities from a top-logprobs map. Whitespace
// around a token is ignored, so tokenizer variants like " 3" and "3" pool
// into the same level. Levels absent from the map get probability zero; the
// result is renormalized.
inline ScoreDistribution extract_distribution(
    const std::string& essay_id, Aspect aspect,
    const std::vector<std::pair<std::string, double>>& token_logprobs,
    ScoreDistribution::Source source = ScoreDistribution::Source::Recorded) {
    ScoreDistribution dist;
    dist.essay_id = essay_id;
    dist.aspect = aspect;
    dist.source = source;

    for (const auto& [token, logprob] : token_logprobs) {
        std::size_t b = 0, e = token.size();
        while (b < e && std::isspace(static_cast<unsigned char>(token[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(token[e - 1]))) --e;
        if (e - b != 1) continue;
        char c = token[b];
        if (c < '0' || c > '9') continue;
        dist.p[static_cast<std::size_t>(c - '0')] += std::exp(logprob);
    }

    double total = 0.0;
    for (double v : dist.p) total += v;
    if (total <= 0.0)
        throw EmptyDistributionError("no digit token in response for " + essay_id +
                                     "/" + to_string(aspect));
    for (double& v : dist.p) v /= total;
    return dist;
}

// WAvg: expectation of the level index under the distribution.
inline double weighted_average(const ScoreDistribution& dist) {
    double v = 0.0;
    for (std::size_t k = 0; k < dist.p.size(); ++k)
        v += dist.p[k] * static_cast<double>(k);
    return v;
}

// ---------------------------------------------------------------------------
// Response cache: one JSON object per line, keyed by (essay, aspect, model).
// The cache stores the raw token logprobs, so scores are always derived from
// persisted bytes and a warm cache reproduces results without any endpoint.
// ---------------------------------------------------------------------------

class ResponseCache {
public:
    using TokenLogprobs = std::vector<std::pair<std::string, double>>;

    explicit ResponseCache(std::string path) : path_(std::move(path)) { load(); }

    bool contains(const std::string& essay_id, const std::string& aspect,
                  const std::string& model) const {
        return entries_.count(key(essay_id, aspect, model)) != 0;
    }

    const TokenLogprobs* find(const std::string& essay_id, const std::string& aspect,
                              const std::string& model) const {
        auto it = entries_.find(key(essay_id, aspect, model));
        return it == entries_.end() ? nullptr : &it->second;
    }

    void insert(const std::string& essay_id, const std::string& aspect,
                const std::string& model, const TokenLogprobs& logprobs) {
        std::lock_guard<std::mutex> lock(mutex_);
        nlohmann::json rec;
        rec["essay_id"] = essay_id;
        rec["aspect"] = aspect;
        rec["model"] = model;
        nlohmann::json tl = nlohmann::json::array();
        for (const auto& [tok, lp] : logprobs) tl.push_back({tok, lp});
        rec["token_logprobs"] = std::move(tl);
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw ParseError("cannot append to cache: " + path_);
        out << rec.dump() << "\n";
        entries_[key(essay_id, aspect, model)] = logprobs;
    }

    std::size_t size() const { return entries_.size(); }

private:
    static std::string key(const std::string& e, const std::string& a,
                           const std::string& m) {
        return e + "\x1f" + a + "\x1f" + m;
    }

    void load() {
        std::ifstream in(path_, std::ios::binary);
        if (!in) return; // a missing cache file is an empty cache
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
                TokenLogprobs tl;
                for (const auto& pair : rec.at("token_logprobs"))
                    tl.emplace_back(pair.at(0).get<std::string>(),
                                    pair.at(1).get<double>());
                entries_[key(rec.at("essay_id").get<std::string>(),
                             rec.at("aspect").get<std::string>(),
                             rec.at("model").get<std::string>())] = std::move(tl);
            } catch (const nlohmann::json::exception& ex) {
                throw ParseError(path_ + ":" + std::to_string(lineno) +
                                 ": bad cache line: " + ex.what());
            }
        }
    }

    std::string path_;
    std::map<std::string, TokenLogprobs> entries_;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Endpoint client
// ---------------------------------------------------------------------------

struct EndpointConfig {
    std::string base_url;  // empty = offline, cache only
    std::string model;
    std::string api_key_env = "RATERLAB_API_KEY"; // credential comes from env only
    int top_logprobs = 20;
    double temperature = 0.0;
    int max_attempts = 5;
    int parallel = 4;
    double backoff_initial_s = 0.5;
    int timeout_s = 120;

    bool offline() const { return base_url.empty(); }
};

struct ScoreCorpusResult {
    PredictionSet predictions;
    std::vector<ScoreDistribution> distributions; // essay-major, aspect order
    std::size_t cache_hits = 0;
    std::size_t fetched = 0;
};

namespace detail {

// Split "http://host:port/prefix" into client target and path prefix.
struct ParsedUrl {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path before /chat/completions
};

inline ParsedUrl parse_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw DomainError("endpoint base_url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_start);
        out.prefix = url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

} // namespace detail

// Issue one chat-completion request and return the top logprobs of the first
// generated token. Fetching is factored out as a callable so tests (and the
// offline path) can run without a network; the default implementation talks
// to an HTTP endpoint and is defined in llmclient.hpp.
using FetchFn = std::function<ResponseCache::TokenLogprobs(
    const EndpointConfig&, const std::string& prompt)>;

// Score every (essay, aspect) pair, reusing cached responses and fetching the
// rest through `fetch` (at most config.parallel in flight). Every fresh
// response is persisted to the cache before scoring, so the resulting
// predictions are always a pure function of the cache contents.
inline ScoreCorpusResult score_corpus(const EndpointConfig& config,
                                      std::vector<EssayText> essays,
                                      const std::vector<Aspect>& aspects,
                                      const std::string& cache_path,
                                      const FetchFn& fetch = {}) {
    std::sort(essays.begin(), essays.end(),
              [](const EssayText& a, const EssayText& b) {
                  return a.essay_id < b.essay_id;
              });
    for (std::size_t i = 0; i + 1 < essays.size(); ++i)
        if (essays[i].essay_id == essays[i + 1].essay_id)
            throw DuplicateError("duplicate essay id: " + essays[i].essay_id);

    ResponseCache cache(cache_path);

    struct Job {
        std::size_t essay;
        std::size_t aspect;
    };
    std::vector<Job> misses;
    std::size_t hits = 0;
    for (std::size_t e = 0; e < essays.size(); ++e)
        for (std::size_t a = 0; a < aspects.size(); ++a) {
            if (cache.contains(essays[e].essay_id, to_string(aspects[a]), config.model))
                ++hits;
            else
                misses.push_back({e, a});
        }

    if (!misses.empty() && (config.offline() || !fetch)) {
        const Job& j = misses.front();
        throw CacheMissError("offline, but no cached response for " +
                             essays[j.essay].essay_id + "/" +
                             to_string(aspects[j.aspect]) + "/" + config.model +
                             " (" + std::to_string(misses.size()) + " missing)");
    }

    if (!misses.empty()) {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= misses.size()) return;
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error) return;
                }
                const Job& j = misses[i];
                try {
                    auto prompt =
                        render_prompt(aspects[j.aspect], essays[j.essay].text);
                    auto logprobs = fetch(config, prompt.rendered_text);
                    cache.insert(essays[j.essay].essay_id,
                                 to_string(aspects[j.aspect]), config.model,
                                 logprobs);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::size_t n_threads =
            std::min<std::size_t>(std::max(config.parallel, 1), misses.size());
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    ScoreCorpusResult out;
    out.cache_hits = hits;
    out.fetched = misses.size();
    out.predictions.source_id = config.model;
    for (const auto& e : essays) out.predictions.essays.push_back(e.essay_id);
    for (Aspect a : aspects)
        out.predictions.scores[a].assign(essays.size(), 0.0);

    for (std::size_t e = 0; e < essays.size(); ++e) {
        for (std::size_t a = 0; a < aspects.size(); ++a) {
            const auto* logprobs =
                cache.find(essays[e].essay_id, to_string(aspects[a]), config.model);
            if (!logprobs)
                throw CacheMissError("response vanished from cache for " +
                                     essays[e].essay_id + "/" +
                                     to_string(aspects[a]));
            auto dist = extract_distribution(essays[e].essay_id, aspects[a],
                                             *logprobs,
                                             ScoreDistribution::Source::Recorded);
            out.predictions.scores[aspects[a]][e] = weighted_average(dist);
            out.distributions.push_back(std::move(dist));
        }
    }
    out.predictions.validate();
    return out;
}

} // namespace raterlab
