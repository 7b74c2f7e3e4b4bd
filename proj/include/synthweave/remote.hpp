#pragma once

// HTTP backends for chat completion and embedding.  Kept out of
// llmio.hpp so that code paths using only the mock backends never pull
// in the HTTP client.
//
// Retry policy (both backends): transport errors, HTTP 429 and HTTP 5xx
// are retried up to max_retries times with full-jitter backoff — the wait
// before retry k is uniform in [0, base_backoff_ms * 2^k].  Any other
// non-200 status fails immediately.  The final error carries a log of
// every attempt.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "synthweave/embed.hpp"
#include "synthweave/llmio.hpp"

namespace synthweave {

namespace detail {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading '/', possibly empty
};

inline ParsedUrl parse_url(const std::string& url) {
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ArgumentError("endpoint URL must include a scheme: " + url);
  std::string scheme = url.substr(0, scheme_end);
  if (scheme == "https")
    throw BackendError("https endpoints are not supported by this build; "
                       "use an http endpoint or the mock backend");
  if (scheme != "http")
    throw ArgumentError("unsupported URL scheme '" + scheme + "' in " + url);
  std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  ParsedUrl p{url.substr(0, path_start), url.substr(path_start)};
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  return p;
}

inline std::string require_api_key(const std::string& env_name) {
  if (env_name.empty())
    throw ArgumentError("remote backend: api_key_env must be set");
  const char* v = std::getenv(env_name.c_str());
  if (v == nullptr || *v == '\0')
    throw BackendError("remote backend: environment variable " + env_name +
                       " is not set");
  return v;
}

// POSTs a JSON body with retries; returns the parsed 200 response.
inline json post_json_with_retries(const ParsedUrl& url,
                                   const std::string& path,
                                   const std::string& api_key,
                                   const json& body, int max_retries,
                                   int base_backoff_ms, Rng& rng) {
  std::string payload = body.dump();
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key}};
  std::vector<std::string> attempts;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    httplib::Client cli(url.base);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(120, 0);
    httplib::Result res =
        cli.Post(path, headers, payload, "application/json");
    if (res && res->status == 200) {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded())
        throw BackendError("remote backend: invalid JSON in response from " +
                           url.base + path);
      return parsed;
    }
    std::string what;
    bool retryable;
    if (!res) {
      what = "transport error: " + httplib::to_string(res.error());
      retryable = true;
    } else {
      what = "HTTP " + std::to_string(res->status);
      if (!res->body.empty())
        what += ": " + res->body.substr(0, 200);
      retryable = res->status == 429 || res->status >= 500;
    }
    attempts.push_back("attempt " + std::to_string(attempt + 1) + ": " + what);
    if (!retryable || attempt == max_retries) {
      std::string log;
      for (const std::string& a : attempts) {
        if (!log.empty()) log += "; ";
        log += a;
      }
      throw BackendError("remote backend: request to " + url.base + path +
                         " failed (" + log + ")");
    }
    std::uint64_t wait = backoff_delay_ms(
        static_cast<std::uint64_t>(base_backoff_ms), attempt, rng);
    if (wait > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(wait));
  }
  throw BackendError("remote backend: unreachable");  // loop always exits above
}

}  // namespace detail

class RemoteChatBackend : public ChatBackend {
 public:
  explicit RemoteChatBackend(const BackendConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind != BackendKind::remote)
      throw ArgumentError("RemoteChatBackend requires kind=remote");
    url_ = detail::parse_url(cfg_.endpoint);
    api_key_ = detail::require_api_key(cfg_.api_key_env);
  }

  std::string complete(const ChatRequest& req) override {
    validate_request(req);
    json body{{"model", req.model.empty() ? cfg_.model : req.model},
              {"messages", json::array()},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
    if (!req.system.empty())
      body["messages"].push_back(
          {{"role", "system"}, {"content", req.system}});
    body["messages"].push_back({{"role", "user"}, {"content", req.user}});

    Rng rng(hash_combine(cfg_.seed, next_request_.fetch_add(1) + 1));
    json resp = detail::post_json_with_retries(
        url_, url_.path + "/chat/completions", api_key_, body,
        cfg_.max_retries, cfg_.base_backoff_ms, rng);
    if (!resp.contains("choices") || !resp["choices"].is_array() ||
        resp["choices"].empty())
      throw BackendError("remote backend: response has no choices");
    const json& msg = resp["choices"][0];
    if (!msg.contains("message") || !msg["message"].contains("content") ||
        !msg["message"]["content"].is_string())
      throw BackendError(
          "remote backend: response missing choices[0].message.content");
    return msg["message"]["content"].get<std::string>();
  }

 private:
  BackendConfig cfg_;
  detail::ParsedUrl url_;
  std::string api_key_;
  std::atomic<std::uint64_t> next_request_{0};
};

class RemoteEmbedBackend : public EmbedBackend {
 public:
  explicit RemoteEmbedBackend(const BackendConfig& cfg) : cfg_(cfg) {
    if (cfg_.endpoint.empty())
      throw ArgumentError("RemoteEmbedBackend requires an endpoint");
    url_ = detail::parse_url(cfg_.endpoint);
    api_key_ = detail::require_api_key(cfg_.api_key_env);
  }

  std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) override {
    if (texts.empty())
      throw ArgumentError("RemoteEmbedBackend::embed: empty input");
    json body{{"input", texts}, {"model", cfg_.model}};
    Rng rng(hash_combine(cfg_.seed, next_request_.fetch_add(1) + 1));
    std::string path = url_.path.empty() ? "/" : url_.path;
    json resp = detail::post_json_with_retries(url_, path, api_key_, body,
                                               cfg_.max_retries,
                                               cfg_.base_backoff_ms, rng);
    if (!resp.contains("data") || !resp["data"].is_array())
      throw BackendError("remote backend: embedding response has no data");
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> seen(texts.size(), false);
    for (const json& item : resp["data"]) {
      if (!item.contains("index") || !item.contains("embedding"))
        throw BackendError(
            "remote backend: embedding item missing index/embedding");
      std::int64_t idx = item["index"].get<std::int64_t>();
      if (idx < 0 || idx >= static_cast<std::int64_t>(texts.size()))
        throw BackendError("remote backend: embedding index out of range: " +
                           std::to_string(idx));
      if (seen[static_cast<std::size_t>(idx)])
        throw BackendError("remote backend: duplicate embedding index " +
                           std::to_string(idx));
      seen[static_cast<std::size_t>(idx)] = true;
      EmbeddingVector v;
      v.values = item["embedding"].get<std::vector<double>>();
      out[static_cast<std::size_t>(idx)] = std::move(v);
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        throw BackendError("remote backend: missing embedding for index " +
                           std::to_string(i));
    return out;
  }

 private:
  BackendConfig cfg_;
  detail::ParsedUrl url_;
  std::string api_key_;
  std::atomic<std::uint64_t> next_request_{0};
};

inline std::unique_ptr<ChatBackend> make_chat_backend(
    const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == BackendKind::mock)
    return std::make_unique<MockChatBackend>(cfg.seed);
  return std::make_unique<RemoteChatBackend>(cfg);
}

inline std::unique_ptr<EmbedBackend> make_embed_backend(
    const BackendConfig& cfg, std::size_t mock_dim = 256) {
  if (cfg.kind == BackendKind::mock)
    return std::make_unique<MockEmbedBackend>(mock_dim, cfg.seed);
  return std::make_unique<RemoteEmbedBackend>(cfg);
}

}  // namespace synthweave
