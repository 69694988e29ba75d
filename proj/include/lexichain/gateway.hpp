#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexichain/embedding.hpp"
#include "lexichain/error.hpp"

namespace lexichain {

enum class Role { system, user, assistant };

inline std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  /// Pipeline stage that issued the request. Recorded, never sent.
  std::string purpose;

  void validate() const {
    if (messages.empty()) fail(ErrorKind::invalid_input, "chat request has no messages");
    if (messages.front().role == Role::assistant) {
      fail(ErrorKind::invalid_input, "chat request must start with a system or user message");
    }
    if (temperature < 0.0) fail(ErrorKind::invalid_input, "temperature must be >= 0");
    if (max_tokens <= 0) fail(ErrorKind::invalid_input, "max_tokens must be positive");
  }

  /// All message contents joined by newlines; what mock matchers search.
  std::string flattened() const {
    std::string out;
    for (const auto& m : messages) {
      if (!out.empty()) out += '\n';
      out += m.content;
    }
    return out;
  }
};

struct ChatResponse {
  std::string content;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::chrono::duration<double, std::milli> latency{0};
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> words) = 0;
  /// Stable identifier of the embedding space; keys the sidecar cache.
  virtual std::string id() const = 0;
};

struct GatewayOptions {
  /// Filled into requests that leave their model empty.
  std::string model = "default";
  size_t max_concurrency = 4;
  bool tracing = false;
};

struct TraceEntry {
  ChatRequest request;
  ChatResponse response;
};

/// Shared front door to the backends. Bounds in-flight requests across all
/// threads and optionally records full request/response pairs.
class Gateway : public LlmBackend, public EmbeddingBackend {
 public:
  Gateway(std::shared_ptr<LlmBackend> llm, std::shared_ptr<EmbeddingBackend> embedder, GatewayOptions options = {})
      : llm_(std::move(llm)), embedder_(std::move(embedder)), options_(std::move(options)) {
    if (options_.max_concurrency == 0) fail(ErrorKind::config, "max_concurrency must be >= 1");
  }

  const GatewayOptions& options() const { return options_; }

  ChatResponse complete(const ChatRequest& req) override {
    req.validate();
    if (!llm_) fail(ErrorKind::config, "no chat backend configured");
    ChatRequest filled = req;
    if (filled.model.empty()) filled.model = options_.model;
    Slot slot(*this);
    const auto start = std::chrono::steady_clock::now();
    ChatResponse resp = llm_->complete(filled);
    if (resp.latency.count() == 0.0) resp.latency = std::chrono::steady_clock::now() - start;
    if (options_.tracing) {
      std::lock_guard lock(trace_mu_);
      trace_.push_back({std::move(filled), resp});
    }
    return resp;
  }

  std::vector<EmbeddingVector> embed(std::span<const std::string> words) override {
    if (words.empty()) fail(ErrorKind::invalid_input, "embed requires at least one word");
    if (!embedder_) fail(ErrorKind::config, "no embedding backend configured");
    Slot slot(*this);
    auto vectors = embedder_->embed(words);
    if (vectors.size() != words.size()) {
      fail(ErrorKind::protocol, "embedding backend returned " + std::to_string(vectors.size()) + " vectors for " +
                                    std::to_string(words.size()) + " inputs");
    }
    return vectors;
  }

  std::string id() const override { return embedder_ ? embedder_->id() : std::string{}; }

  std::vector<TraceEntry> trace() const {
    std::lock_guard lock(trace_mu_);
    return trace_;
  }

  size_t peak_in_flight() const {
    std::lock_guard lock(slot_mu_);
    return peak_;
  }

 private:
  class Slot {
   public:
    explicit Slot(Gateway& g) : g_(g) {
      std::unique_lock lock(g_.slot_mu_);
      g_.slot_cv_.wait(lock, [&] { return g_.in_flight_ < g_.options_.max_concurrency; });
      ++g_.in_flight_;
      g_.peak_ = std::max(g_.peak_, g_.in_flight_);
    }
    ~Slot() {
      {
        std::lock_guard lock(g_.slot_mu_);
        --g_.in_flight_;
      }
      g_.slot_cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    Gateway& g_;
  };

  std::shared_ptr<LlmBackend> llm_;
  std::shared_ptr<EmbeddingBackend> embedder_;
  GatewayOptions options_;

  mutable std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  size_t in_flight_ = 0;
  size_t peak_ = 0;

  mutable std::mutex trace_mu_;
  std::vector<TraceEntry> trace_;
};

/// Per-call bookkeeping kept in run records.
struct CallStat {
  std::string purpose;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0.0;
};

/// Forwards to another backend and remembers what each call cost. One
/// recorder per sentence; not shared between threads.
class CallRecorder : public LlmBackend {
 public:
  explicit CallRecorder(LlmBackend& inner) : inner_(inner) {}

  ChatResponse complete(const ChatRequest& req) override {
    ChatResponse resp = inner_.complete(req);
    calls_.push_back({req.purpose, resp.prompt_tokens, resp.completion_tokens, resp.latency.count()});
    requests_.push_back(req);
    return resp;
  }

  const std::vector<CallStat>& calls() const { return calls_; }
  const std::vector<ChatRequest>& requests() const { return requests_; }

 private:
  LlmBackend& inner_;
  std::vector<CallStat> calls_;
  std::vector<ChatRequest> requests_;
};

inline nlohmann::json to_json(const ChatMessage& m) {
  return {{"role", std::string(to_string(m.role))}, {"content", m.content}};
}

inline Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "assistant") return Role::assistant;
  if (s == "user") return Role::user;
  fail(ErrorKind::protocol, "unknown message role '" + std::string(s) + "'");
}

}  // namespace lexichain
