#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lexichain/dataset.hpp"
#include "lexichain/digest.hpp"
#include "lexichain/gateway.hpp"
#include "lexichain/http_backend.hpp"
#include "lexichain/keyword_extractor.hpp"
#include "lexichain/lexicon_index.hpp"
#include "lexichain/metrics.hpp"
#include "lexichain/mock_backend.hpp"
#include "lexichain/prompt_chain.hpp"

namespace lexichain {

struct BackendConfig {
  std::string base_url = "http://localhost:8000";
  std::string api_key;
  std::string model = "default";
  std::string embed_model = "bge-m3";
  double timeout_s = 60.0;
  size_t max_concurrency = 4;
  int retries = 3;
  /// Non-empty selects the scripted mock backend.
  std::string mock_script;
};

struct RunConfig {
  std::string label = "run";
  KeywordPolicy policy = KeywordPolicy::llm_adaptive();
  bool self_check_enabled = true;
  int max_iters = kDefaultMaxIters;
  double nn_threshold = kDefaultNnThreshold;
  std::string index_path;
  BackendConfig backend;
  DatasetSpec dataset;
  bool bleu = true;
  bool chrf = true;
  std::string output = "run.jsonl";
  double failure_threshold = 0.10;
  size_t shots = 0;
  uint64_t shot_seed = 0;
  std::string dev_src;
  std::string dev_ref;

  /// Self-check off means a single translation pass.
  int effective_max_iters() const { return self_check_enabled ? max_iters : 1; }

  void validate() const {
    if (max_iters < 1) fail(ErrorKind::config, "max_iters must be >= 1");
    if (!(nn_threshold >= 0.0 && nn_threshold <= 1.0)) fail(ErrorKind::config, "threshold must lie in [0,1]");
    if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
      fail(ErrorKind::config, "failure_threshold must lie in [0,1]");
    }
    if (backend.max_concurrency == 0) fail(ErrorKind::config, "max_concurrency must be >= 1");
    if (policy.kind != KeywordPolicy::Kind::none && index_path.empty()) {
      fail(ErrorKind::config, "keyword policy '" + policy.to_string() + "' needs a dictionary index");
    }
    if (shots > 0 && (dev_src.empty() || dev_ref.empty())) fail(ErrorKind::config, "few-shot mode needs dev_src and dev_ref");
  }

  /// Every effective setting except where the run file goes. Secrets given
  /// literally are masked; env indirections are echoed as written.
  nlohmann::json to_json() const {
    auto secret = [](const std::string& v) -> std::string {
      if (v.empty() || v.rfind("env:", 0) == 0 || v[0] == '$') return v;
      return "***";
    };
    nlohmann::json j;
    j["label"] = label;
    j["policy"] = {{"keywords", policy.to_string()}, {"self_check", self_check_enabled},
                   {"max_iters", effective_max_iters()}};
    j["dictionary"] = {{"index", index_path}, {"threshold", nn_threshold}};
    j["gateway"] = {{"base_url", mock_script_active() ? "" : backend.base_url},
                    {"api_key", secret(backend.api_key)},
                    {"model", backend.model},
                    {"embed_model", backend.embed_model},
                    {"timeout_s", backend.timeout_s},
                    {"max_concurrency", backend.max_concurrency},
                    {"retries", backend.retries},
                    {"mock_script", backend.mock_script}};
    j["dataset"] = {{"name", dataset.name},
                    {"src", dataset.src_path.string()},
                    {"ref", dataset.ref_path.string()},
                    {"src_lang", dataset.src_lang},
                    {"tgt_lang", dataset.tgt_lang},
                    {"expected_size", dataset.expected_size ? nlohmann::json(*dataset.expected_size) : nlohmann::json()}};
    j["metrics"] = {{"bleu", bleu ? metrics::BleuConfig{}.signature() : ""},
                    {"chrf", chrf ? metrics::ChrfConfig{}.signature() : ""}};
    j["harness"] = {{"failure_threshold", failure_threshold}, {"shots", shots}, {"shot_seed", shot_seed},
                    {"dev_src", dev_src}, {"dev_ref", dev_ref}};
    j["versions"] = {{"prompts", prompts::kPromptVersion}, {"impl", metrics::kImplVersion}};
    return j;
  }

  std::string fingerprint() const { return sha256_hex(to_json().dump()); }

 private:
  bool mock_script_active() const { return !backend.mock_script.empty(); }
};

/// Builds the shared gateway: scripted mock when a script is configured,
/// the OpenAI-compatible HTTP client otherwise.
inline std::shared_ptr<Gateway> make_gateway(const BackendConfig& cfg, bool tracing = false) {
  GatewayOptions opts;
  opts.model = cfg.model;
  opts.max_concurrency = cfg.max_concurrency;
  opts.tracing = tracing;
  if (!cfg.mock_script.empty()) {
    auto mock = std::make_shared<MockBackend>(MockScript::load(cfg.mock_script));
    return std::make_shared<Gateway>(mock, mock, opts);
  }
  HttpConfig http;
  http.base_url = cfg.base_url;
  http.api_key = cfg.api_key;
  http.model = cfg.model;
  http.embed_model = cfg.embed_model;
  http.timeout_s = cfg.timeout_s;
  http.retries = cfg.retries;
  auto backend = std::make_shared<HttpBackend>(std::move(http));
  return std::make_shared<Gateway>(backend, backend, opts);
}

/// Everything that happened to one sentence.
struct RunRecord {
  size_t sentence_index = 0;
  std::string source;
  std::string reference;
  std::string policy;
  KeywordExtraction keywords;
  ConstraintSet constraints;
  std::optional<ChainResult> chain;
  std::vector<CallStat> calls;
  std::string fingerprint;
  /// Set when the sentence failed; the record is then excluded from scoring.
  std::optional<ErrorKind> error_kind;
  std::string error;

  bool ok() const { return !error_kind.has_value(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["type"] = "record";
    j["sentence_index"] = sentence_index;
    j["status"] = ok() ? "ok" : "failed";
    j["source"] = source;
    j["reference"] = reference;
    j["policy"] = policy;
    nlohmann::json kws = nlohmann::json::array();
    for (const auto& kw : keywords.selection.keywords) {
      nlohmann::json k = {{"index", kw.token_index}, {"word", kw.word}};
      if (keywords.scores) k["score"] = (*keywords.scores)[kw.token_index];
      kws.push_back(std::move(k));
    }
    j["keywords"] = std::move(kws);
    j["scores"] = keywords.scores ? nlohmann::json(std::vector<double>(keywords.scores->values().begin(),
                                                                       keywords.scores->values().end()))
                                  : nlohmann::json();
    j["keyword_attempts"] = keywords.attempts;
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : constraints) {
      cs.push_back({{"source_word", c.source_word}, {"target_term", c.target_term},
                    {"match_kind", to_string(c.match_kind)}, {"similarity", c.similarity},
                    {"matched_entry", c.matched_entry}});
    }
    j["constraints"] = std::move(cs);
    nlohmann::json drafts = nlohmann::json::array();
    ChainDegradation degraded;
    degraded.extraction_fallback = keywords.fell_back;
    if (chain) {
      for (const auto& d : chain->drafts) {
        drafts.push_back({{"text", d.text}, {"iteration", d.iteration}, {"satisfied", d.satisfied},
                          {"all_satisfied", d.all_satisfied}});
      }
      j["best"] = to_string(chain->best);
      j["best_text"] = chain->best_text;
      degraded.selection_fallback = chain->degraded.selection_fallback;
      degraded.refinement_aborted = chain->degraded.refinement_aborted;
      degraded.detail = chain->degraded.detail;
    } else {
      j["best"] = nullptr;
      j["best_text"] = nullptr;
    }
    j["drafts"] = std::move(drafts);
    j["degraded"] = {{"extraction_fallback", degraded.extraction_fallback},
                     {"selection_fallback", degraded.selection_fallback},
                     {"refinement_aborted", degraded.refinement_aborted},
                     {"detail", degraded.detail}};
    nlohmann::json calls_json = nlohmann::json::array();
    for (const auto& c : calls) {
      calls_json.push_back({{"purpose", c.purpose}, {"prompt_tokens", c.prompt_tokens},
                            {"completion_tokens", c.completion_tokens}, {"latency_ms", c.latency_ms}});
    }
    j["calls"] = std::move(calls_json);
    if (error_kind) {
      j["error_kind"] = to_string(*error_kind);
      j["error"] = error;
    }
    j["fingerprint"] = fingerprint;
    return j;
  }
};

/// Resources shared by all sentences of a run.
struct PipelineContext {
  KeywordPolicy policy;
  const LexiconIndex* index = nullptr;
  double nn_threshold = kDefaultNnThreshold;
  ChainOptions chain;
};

/// Runs keyword extraction, retrieval and the prompt chain for one
/// sentence. Library errors land in the record instead of escaping.
inline RunRecord process_sentence(size_t index, const SentencePair& pair, const std::string& src_lang,
                                  const std::string& tgt_lang, const PipelineContext& ctx, Gateway& gateway) {
  RunRecord rec;
  rec.sentence_index = index;
  rec.source = pair.source;
  rec.reference = pair.reference;
  rec.policy = ctx.policy.to_string();
  CallRecorder recorder(gateway);
  try {
    const SourceSentence sentence(pair.source, src_lang, tgt_lang);
    rec.keywords = extract_keywords(sentence, ctx.policy, recorder);
    if (!rec.keywords.selection.empty()) {
      if (ctx.index == nullptr) fail(ErrorKind::config, "keywords selected but no dictionary index loaded");
      rec.constraints = build_constraints(rec.keywords.selection, *ctx.index, gateway, ctx.nn_threshold);
    }
    rec.chain = run_chain(sentence, rec.constraints, recorder, ctx.chain);
    rec.chain->degraded.extraction_fallback = rec.keywords.fell_back;
  } catch (const Error& e) {
    rec.error_kind = e.kind();
    rec.error = e.what();
    rec.chain.reset();
  }
  rec.calls = recorder.calls();
  return rec;
}

struct RunSummary {
  std::filesystem::path path;
  size_t sentences = 0;
  size_t succeeded = 0;
  size_t failed = 0;
  bool run_failed = false;
  std::optional<metrics::CorpusScore> bleu;
  std::optional<metrics::CorpusScore> chrf;
  std::vector<RunRecord> records;
  std::string fingerprint;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// BLEU and chrF++ over the best translations of successful records.
inline void score_records(const RunConfig& cfg, RunSummary& summary) {
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  for (const auto& r : summary.records) {
    if (!r.ok()) continue;
    hyps.push_back(r.chain->best_text);
    refs.push_back(r.reference);
  }
  if (hyps.empty()) return;
  if (cfg.bleu) summary.bleu = metrics::bleu_corpus(hyps, refs);
  if (cfg.chrf) summary.chrf = metrics::chrf_pp(hyps, refs);
}

inline nlohmann::json summary_json(const RunSummary& s) {
  nlohmann::json scores = nlohmann::json::array();
  if (s.bleu) scores.push_back(metrics::score_record("BLEU", *s.bleu, metrics::BleuConfig{}.signature()));
  if (s.chrf) scores.push_back(metrics::score_record("chrF++", *s.chrf, metrics::ChrfConfig{}.signature()));
  return {{"type", "summary"},         {"sentences", s.sentences}, {"succeeded", s.succeeded},
          {"failed", s.failed},        {"status", s.run_failed ? "failed" : "ok"},
          {"scores", std::move(scores)}, {"fingerprint", s.fingerprint}};
}

/// Loads an index and checks it matches the language pair and the embedder
/// queries will be sent to.
inline LexiconIndex load_compatible_index(const std::filesystem::path& path, const std::string& src_lang,
                                          const std::string& tgt_lang, const EmbeddingBackend& embedder) {
  LexiconIndex index = load_index(path);
  if (index.src_lang() != src_lang || index.tgt_lang() != tgt_lang) {
    fail(ErrorKind::config, "index is " + index.src_lang() + "-" + index.tgt_lang() + " but the pair is " + src_lang +
                                "-" + tgt_lang);
  }
  if (index.embedder_id() != embedder.id()) {
    fail(ErrorKind::config, "index was embedded with '" + index.embedder_id() + "' but the gateway embeds with '" +
                                embedder.id() + "'");
  }
  return index;
}

/// Evaluates a whole dataset. Sentences run concurrently up to the gateway
/// bound; records are written in sentence order once all have finished.
inline RunSummary run_batch(const RunConfig& cfg, std::shared_ptr<Gateway> gateway = nullptr) {
  cfg.validate();
  const auto pairs = load_dataset(cfg.dataset);
  if (!gateway) gateway = make_gateway(cfg.backend);

  std::optional<LexiconIndex> index;
  if (cfg.policy.kind != KeywordPolicy::Kind::none) {
    index = load_compatible_index(cfg.index_path, cfg.dataset.src_lang, cfg.dataset.tgt_lang, *gateway);
  }

  PipelineContext ctx;
  ctx.policy = cfg.policy;
  ctx.index = index ? &*index : nullptr;
  ctx.nn_threshold = cfg.nn_threshold;
  ctx.chain.max_iters = cfg.effective_max_iters();
  if (cfg.shots > 0) {
    const auto dev = load_dataset({"dev", cfg.dev_src, cfg.dev_ref, cfg.dataset.src_lang, cfg.dataset.tgt_lang, {}});
    for (size_t i : sample_indices(dev.size(), cfg.shots, cfg.shot_seed)) {
      ctx.chain.examples.push_back({dev[i].source, dev[i].reference});
    }
  }

  RunSummary summary;
  summary.fingerprint = cfg.fingerprint();
  summary.sentences = pairs.size();
  summary.records.resize(pairs.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < pairs.size(); i = next++) {
      summary.records[i] =
          process_sentence(i, pairs[i], cfg.dataset.src_lang, cfg.dataset.tgt_lang, ctx, *gateway);
      summary.records[i].fingerprint = summary.fingerprint;
    }
  };
  const size_t workers = std::max<size_t>(1, std::min(cfg.backend.max_concurrency, pairs.size()));
  {
    std::vector<std::jthread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (const auto& r : summary.records) (r.ok() ? summary.succeeded : summary.failed) += 1;
  summary.run_failed = pairs.empty() ||
                       static_cast<double>(summary.failed) > cfg.failure_threshold * static_cast<double>(pairs.size());
  score_records(cfg, summary);

  summary.path = cfg.output;
  if (summary.path.has_parent_path()) std::filesystem::create_directories(summary.path.parent_path());
  std::ofstream out(summary.path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write run file " + summary.path.string());
  out << nlohmann::json{{"type", "header"}, {"fingerprint", summary.fingerprint}, {"config", cfg.to_json()},
                        {"started_at", utc_timestamp()}}
             .dump()
      << '\n';
  for (const auto& r : summary.records) out << r.to_json().dump() << '\n';
  out << summary_json(summary).dump() << '\n';
  if (!out) fail(ErrorKind::io, "failed writing run file " + summary.path.string());
  return summary;
}

/// The parts of a run file a report needs.
struct RunFileView {
  std::filesystem::path path;
  std::string label;
  std::string fingerprint;
  nlohmann::json config;
  nlohmann::json summary;
  std::vector<nlohmann::json> records;

  std::string pair() const {
    return config.at("dataset").at("src_lang").get<std::string>() + "-" +
           config.at("dataset").at("tgt_lang").get<std::string>();
  }
  std::string dataset_name() const { return config.at("dataset").at("name").get<std::string>(); }

  std::optional<double> score(std::string_view metric) const {
    for (const auto& s : summary.at("scores")) {
      if (s.at("metric") == metric) return s.at("score").get<double>();
    }
    return std::nullopt;
  }
  std::string signature(std::string_view metric) const {
    for (const auto& s : summary.at("scores")) {
      if (s.at("metric") == metric) return s.at("signature").get<std::string>();
    }
    return {};
  }
};

inline RunFileView read_run_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read run file " + path.string());
  RunFileView view;
  view.path = path;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        view.fingerprint = j.at("fingerprint").get<std::string>();
        view.config = j.at("config");
        view.label = view.config.value("label", "");
      } else if (type == "record") {
        view.records.push_back(std::move(j));
      } else if (type == "summary") {
        view.summary = std::move(j);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::comparison, "malformed run file " + path.string() + ": " + e.what());
  }
  if (view.config.is_null() || view.summary.is_null()) {
    fail(ErrorKind::comparison, "run file " + path.string() + " lacks a header or summary line");
  }
  return view;
}

enum class ReportRows { pair, dataset };

struct Report {
  std::string markdown;
  std::string csv;
};

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Per-row, per-label BLEU and chrF++ table. With more than one label the
/// strictly best value in each metric group is bolded.
inline Report report(const std::vector<RunFileView>& runs, ReportRows rows = ReportRows::pair) {
  if (runs.empty()) fail(ErrorKind::comparison, "no runs to report");
  std::vector<std::string> labels;
  for (const auto& r : runs) {
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
  }

  const std::vector<std::string> metric_names = {"BLEU", "chrF++"};
  std::vector<std::string> metrics_present;
  for (const auto& m : metric_names) {
    size_t have = 0;
    for (const auto& r : runs) have += r.score(m).has_value() ? 1 : 0;
    if (have == runs.size()) {
      metrics_present.push_back(m);
    } else if (have != 0) {
      fail(ErrorKind::comparison, m + " is missing from some runs");
    }
  }

  auto row_key = [&](const RunFileView& r) { return rows == ReportRows::pair ? r.pair() : r.dataset_name(); };
  std::vector<std::string> row_keys;
  std::map<std::string, std::map<std::string, const RunFileView*>> grid;
  for (const auto& r : runs) {
    const std::string key = row_key(r);
    if (!grid.contains(key)) row_keys.push_back(key);
    auto& cell = grid[key][r.label];
    if (cell != nullptr) fail(ErrorKind::comparison, "label '" + r.label + "' appears twice for " + key);
    cell = &r;
  }
  for (const auto& key : row_keys) {
    const auto& row = grid[key];
    if (row.size() != labels.size()) {
      fail(ErrorKind::comparison, "row " + key + " does not have a run for every label");
    }
    const RunFileView* first = row.begin()->second;
    for (const auto& [label, r] : row) {
      if (r->dataset_name() != first->dataset_name() || r->pair() != first->pair() ||
          r->summary.at("sentences") != first->summary.at("sentences")) {
        fail(ErrorKind::comparison, "runs for " + key + " were made on different datasets");
      }
      for (const auto& m : metrics_present) {
        if (r->signature(m) != first->signature(m)) {
          fail(ErrorKind::comparison, m + " configurations differ between runs for " + key);
        }
      }
    }
  }

  std::ostringstream md;
  std::ostringstream csv;
  md << (rows == ReportRows::pair ? "| Language |" : "| Dataset | Size |");
  for (const auto& m : metrics_present) {
    for (const auto& l : labels) md << ' ' << m << ' ' << l << " |";
  }
  md << "\n|" << (rows == ReportRows::pair ? "---|" : "---|---:|");
  for (size_t i = 0; i < metrics_present.size() * labels.size(); ++i) md << "---:|";
  md << '\n';
  csv << "pair,metric,run_label,score\n";

  for (const auto& key : row_keys) {
    const auto& row = grid[key];
    md << "| " << key << " |";
    if (rows == ReportRows::dataset) md << ' ' << row.begin()->second->summary.at("sentences").get<size_t>() << " |";
    for (const auto& m : metrics_present) {
      std::optional<std::string> winner;
      if (labels.size() > 1) {
        double best = -1.0;
        size_t best_count = 0;
        for (const auto& l : labels) {
          const double v = std::stod(detail::fixed2(*row.at(l)->score(m)));
          if (v > best) {
            best = v;
            best_count = 1;
            winner = l;
          } else if (v == best) {
            ++best_count;
          }
        }
        if (best_count != 1) winner.reset();
      }
      for (const auto& l : labels) {
        const double v = *row.at(l)->score(m);
        const std::string cell = detail::fixed2(v);
        md << ' ' << (winner && *winner == l ? "**" + cell + "**" : cell) << " |";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        csv << key << ',' << m << ',' << l << ',' << buf << '\n';
      }
    }
    md << '\n';
  }
  return {md.str(), csv.str()};
}

}  // namespace lexichain
