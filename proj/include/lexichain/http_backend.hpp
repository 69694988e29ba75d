#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "lexichain/gateway.hpp"

namespace lexichain {

struct HttpConfig {
  std::string base_url;
  std::string api_key;
  std::string model;
  std::string embed_model;
  double timeout_s = 60.0;
  /// Total attempts per request, including the first.
  int retries = 3;
  std::chrono::milliseconds backoff{500};
};

/// Resolves `env:NAME` and `$NAME` indirections; other values pass through.
inline std::string resolve_secret(const std::string& value) {
  std::string name;
  if (value.rfind("env:", 0) == 0) {
    name = value.substr(4);
  } else if (value.size() > 1 && value[0] == '$') {
    name = value.substr(1);
  } else {
    return value;
  }
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string{};
}

/// Client for OpenAI-compatible /v1/chat/completions and /v1/embeddings.
class HttpBackend : public LlmBackend, public EmbeddingBackend {
 public:
  explicit HttpBackend(HttpConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.retries < 1) fail(ErrorKind::config, "retries must be >= 1");
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorKind::config, "base_url needs a scheme: '" + cfg_.base_url + "'");
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    origin_ = cfg_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = cfg_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  ChatResponse complete(const ChatRequest& req) override {
    nlohmann::json body;
    body["model"] = req.model.empty() ? cfg_.model : req.model;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) body["messages"].push_back(to_json(m));
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;

    const auto start = std::chrono::steady_clock::now();
    const nlohmann::json reply = post("/v1/chat/completions", body);
    ChatResponse resp;
    try {
      resp.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (reply.contains("usage") && reply["usage"].is_object()) {
        resp.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
        resp.completion_tokens = reply["usage"].value("completion_tokens", 0L);
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::protocol, std::string("malformed chat completion response: ") + e.what());
    }
    resp.latency = std::chrono::steady_clock::now() - start;
    return resp;
  }

  std::vector<EmbeddingVector> embed(std::span<const std::string> words) override {
    nlohmann::json body;
    body["model"] = cfg_.embed_model;
    body["input"] = std::vector<std::string>(words.begin(), words.end());
    const nlohmann::json reply = post("/v1/embeddings", body);
    std::vector<EmbeddingVector> out;
    try {
      const auto& data = reply.at("data");
      if (data.size() != words.size()) {
        fail(ErrorKind::protocol, "embedding response has " + std::to_string(data.size()) + " items for " +
                                      std::to_string(words.size()) + " inputs");
      }
      out.resize(data.size());
      std::vector<bool> seen(data.size(), false);
      for (size_t i = 0; i < data.size(); ++i) {
        const size_t slot = data[i].value("index", i);
        if (slot >= out.size() || seen[slot]) fail(ErrorKind::protocol, "embedding response has a bad index");
        seen[slot] = true;
        out[slot] = EmbeddingVector(data[i].at("embedding").get<std::vector<double>>());
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::protocol, std::string("malformed embedding response: ") + e.what());
    }
    return out;
  }

  std::string id() const override { return "http:" + cfg_.embed_model; }

 private:
  static bool retryable(int status) { return status == 429 || status >= 500; }

  nlohmann::json post(const std::string& endpoint, const nlohmann::json& body) {
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 1) std::this_thread::sleep_for(cfg_.backoff * (1 << (attempt - 2)));

      httplib::Client cli(origin_);
      const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(cfg_.timeout_s));
      cli.set_connection_timeout(timeout);
      cli.set_read_timeout(timeout);
      cli.set_write_timeout(timeout);
      const std::string key = resolve_secret(cfg_.api_key);
      if (!key.empty()) cli.set_bearer_token_auth(key);

      auto res = cli.Post(prefix_ + endpoint, payload, "application/json");
      if (!res) {
        last_error = "request to " + origin_ + prefix_ + endpoint + " failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          fail(ErrorKind::protocol, std::string("response is not JSON: ") + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status) + " from " + prefix_ + endpoint;
      if (!retryable(res->status)) throw TransportError(last_error, res->status);
      if (attempt == cfg_.retries) throw TransportError(last_error + " after " + std::to_string(attempt) + " attempts",
                                                        res->status);
    }
    throw TransportError(last_error + " after " + std::to_string(cfg_.retries) + " attempts");
  }

  HttpConfig cfg_;
  std::string origin_;
  std::string prefix_;
};

}  // namespace lexichain
