#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexichain/digest.hpp"
#include "lexichain/gateway.hpp"
#include "lexichain/random.hpp"

namespace lexichain {

/// One scripted reply. A rule matches a request when every populated
/// matcher agrees: `match` and each of `match_all` must occur in the
/// flattened request text, and `position` must equal the 0-based call index.
/// A rule with no matchers matches anything (pure sequence mode).
struct MockRule {
  std::optional<std::string> match;
  std::vector<std::string> match_all;
  std::optional<size_t> position;
  std::string response;
  /// Sticky rules are never consumed.
  bool repeat = false;
  /// When set, the rule raises a transport error instead of replying.
  bool transport_error = false;

  bool matches(const std::string& text, size_t call_index) const {
    if (match && text.find(*match) == std::string::npos) return false;
    for (const auto& m : match_all) {
      if (text.find(m) == std::string::npos) return false;
    }
    if (position && *position != call_index) return false;
    return true;
  }
};

struct MockScript {
  std::vector<MockRule> rules;
  size_t embedding_dim = 32;
  /// Fixed vectors for particular words; everything else is hash-derived.
  std::map<std::string, std::vector<double>> embeddings;

  static MockScript from_json(const nlohmann::json& j) {
    MockScript script;
    if (j.is_null()) return script;
    if (!j.is_object()) fail(ErrorKind::config, "mock script must be a JSON object");
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
      MockRule rule;
      if (r.contains("match")) rule.match = r.at("match").get<std::string>();
      if (r.contains("match_all")) rule.match_all = r.at("match_all").get<std::vector<std::string>>();
      if (r.contains("position")) rule.position = r.at("position").get<size_t>();
      rule.response = r.value("response", std::string{});
      rule.repeat = r.value("repeat", false);
      rule.transport_error = r.value("error", std::string{}) == "transport";
      script.rules.push_back(std::move(rule));
    }
    script.embedding_dim = j.value("embedding_dim", size_t{32});
    if (script.embedding_dim == 0) fail(ErrorKind::config, "mock embedding_dim must be positive");
    if (j.contains("embeddings")) {
      for (const auto& [word, v] : j.at("embeddings").items()) {
        script.embeddings[word] = v.get<std::vector<double>>();
      }
    }
    return script;
  }

  static MockScript load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read mock script " + path.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::config, "malformed mock script " + path.string() + ": " + e.what());
    }
  }
};

/// Deterministic unit vector for a word: SHA-256 of the word seeds
/// mt19937_64, which yields `dim` values in [-1, 1) that are then normalized.
inline EmbeddingVector hash_embedding(std::string_view word, size_t dim) {
  const Sha256 digest = sha256(word);
  uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | digest[static_cast<size_t>(i)];
  std::mt19937_64 rng(seed);
  std::vector<double> values(dim);
  for (double& v : values) v = 2.0 * uniform_unit(rng) - 1.0;
  return EmbeddingVector(std::move(values)).normalized();
}

/// Offline backend driven by a MockScript. Replies are a pure function of
/// the script and the order of incoming requests.
class MockBackend : public LlmBackend, public EmbeddingBackend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)), consumed_(script_.rules.size(), false) {}

  ChatResponse complete(const ChatRequest& req) override {
    std::lock_guard lock(mu_);
    const size_t call_index = log_.size();
    log_.push_back(req);
    const std::string text = req.flattened();
    for (size_t i = 0; i < script_.rules.size(); ++i) {
      const MockRule& rule = script_.rules[i];
      if (consumed_[i] || !rule.matches(text, call_index)) continue;
      if (!rule.repeat) consumed_[i] = true;
      if (rule.transport_error) throw TransportError("scripted transport failure (" + req.purpose + ")");
      ChatResponse resp;
      resp.content = rule.response;
      resp.prompt_tokens = word_count(text);
      resp.completion_tokens = word_count(rule.response);
      return resp;
    }
    fail(ErrorKind::script_exhausted, "mock script has no rule for this " + req.purpose + " request");
  }

  std::vector<EmbeddingVector> embed(std::span<const std::string> words) override {
    std::vector<EmbeddingVector> out;
    out.reserve(words.size());
    {
      std::lock_guard lock(mu_);
      embed_calls_ += 1;
      embedded_words_ += words.size();
    }
    for (const auto& w : words) {
      if (auto it = script_.embeddings.find(w); it != script_.embeddings.end()) {
        out.emplace_back(it->second);
      } else {
        out.push_back(hash_embedding(w, script_.embedding_dim));
      }
    }
    return out;
  }

  std::string id() const override {
    std::string id = "mock-sha256-d" + std::to_string(script_.embedding_dim);
    if (!script_.embeddings.empty()) {
      nlohmann::json j = script_.embeddings;
      id += "-" + sha256_hex(j.dump()).substr(0, 12);
    }
    return id;
  }

  std::vector<ChatRequest> call_log() const {
    std::lock_guard lock(mu_);
    return log_;
  }

  size_t call_count() const {
    std::lock_guard lock(mu_);
    return log_.size();
  }

  size_t embed_calls() const {
    std::lock_guard lock(mu_);
    return embed_calls_;
  }

  size_t embedded_words() const {
    std::lock_guard lock(mu_);
    return embedded_words_;
  }

 private:
  static long word_count(const std::string& s) {
    std::istringstream in(s);
    long n = 0;
    std::string w;
    while (in >> w) ++n;
    return n;
  }

  MockScript script_;
  std::vector<bool> consumed_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> log_;
  size_t embed_calls_ = 0;
  size_t embedded_words_ = 0;
};

}  // namespace lexichain
