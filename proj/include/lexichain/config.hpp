#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "lexichain/harness.hpp"

namespace lexichain {

// Config files are flat key=value text with [section] headers:
//
//   label = ours
//   [gateway]    base_url api_key model embed_model timeout_s max_concurrency retries mock_script
//   [dictionary] index threshold
//   [policy]     keywords self_check max_iters
//   [dataset]    name src ref src_lang tgt_lang expected_size flores_dir
//   [metrics]    bleu chrf
//   [harness]    output failure_threshold shots shot_seed dev_src dev_ref
//
// '#' or ';' at the start of a line, or after whitespace, begins a comment.
// Relative paths resolve against the directory holding the file.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(ErrorKind::config, key + ": expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::config, key + ": expected a number, got '" + v + "'");
}

inline uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long n = std::stoull(v, &used);
      if (used == v.size()) return n;
    }
  } catch (const std::exception&) {
  }
  fail(ErrorKind::config, key + ": expected a non-negative integer, got '" + v + "'");
}

}  // namespace detail

/// Applies one `section.key = value` setting to a config.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base_dir = {}) {
  auto path = [&](const std::string& v) -> std::string {
    if (v.empty()) return v;
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p.string() : (base_dir / p).lexically_normal().string();
  };
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_uint;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&)>> kSetters = {
      {"label", [](RunConfig& c, const std::string& v) { c.label = v; }},
      {"gateway.base_url", [](RunConfig& c, const std::string& v) { c.backend.base_url = v; }},
      {"gateway.api_key", [](RunConfig& c, const std::string& v) { c.backend.api_key = v; }},
      {"gateway.model", [](RunConfig& c, const std::string& v) { c.backend.model = v; }},
      {"gateway.embed_model", [](RunConfig& c, const std::string& v) { c.backend.embed_model = v; }},
      {"gateway.timeout_s",
       [](RunConfig& c, const std::string& v) { c.backend.timeout_s = parse_double("gateway.timeout_s", v); }},
      {"gateway.max_concurrency",
       [](RunConfig& c, const std::string& v) {
         c.backend.max_concurrency = parse_uint("gateway.max_concurrency", v);
       }},
      {"gateway.retries",
       [](RunConfig& c, const std::string& v) {
         c.backend.retries = static_cast<int>(parse_uint("gateway.retries", v));
       }},
      {"dictionary.threshold",
       [](RunConfig& c, const std::string& v) { c.nn_threshold = parse_double("dictionary.threshold", v); }},
      {"policy.keywords",
       [](RunConfig& c, const std::string& v) {
         try {
           c.policy = KeywordPolicy::parse(v);
         } catch (const Error& e) {
           fail(ErrorKind::config, std::string("policy.keywords: ") + e.what());
         }
       }},
      {"policy.self_check",
       [](RunConfig& c, const std::string& v) { c.self_check_enabled = parse_bool("policy.self_check", v); }},
      {"policy.max_iters",
       [](RunConfig& c, const std::string& v) {
         c.max_iters = static_cast<int>(parse_uint("policy.max_iters", v));
       }},
      {"dataset.name", [](RunConfig& c, const std::string& v) { c.dataset.name = v; }},
      {"dataset.src_lang", [](RunConfig& c, const std::string& v) { c.dataset.src_lang = v; }},
      {"dataset.tgt_lang", [](RunConfig& c, const std::string& v) { c.dataset.tgt_lang = v; }},
      {"dataset.expected_size",
       [](RunConfig& c, const std::string& v) { c.dataset.expected_size = parse_uint("dataset.expected_size", v); }},
      {"metrics.bleu", [](RunConfig& c, const std::string& v) { c.bleu = parse_bool("metrics.bleu", v); }},
      {"metrics.chrf", [](RunConfig& c, const std::string& v) { c.chrf = parse_bool("metrics.chrf", v); }},
      {"harness.failure_threshold",
       [](RunConfig& c, const std::string& v) {
         c.failure_threshold = parse_double("harness.failure_threshold", v);
       }},
      {"harness.shots", [](RunConfig& c, const std::string& v) { c.shots = parse_uint("harness.shots", v); }},
      {"harness.shot_seed",
       [](RunConfig& c, const std::string& v) { c.shot_seed = parse_uint("harness.shot_seed", v); }},
  };
  if (key == "gateway.mock_script") {
    cfg.backend.mock_script = path(value);
  } else if (key == "dictionary.index") {
    cfg.index_path = path(value);
  } else if (key == "dataset.src") {
    cfg.dataset.src_path = path(value);
  } else if (key == "dataset.ref") {
    cfg.dataset.ref_path = path(value);
  } else if (key == "dataset.flores_dir") {
    if (cfg.dataset.src_lang.empty() || cfg.dataset.tgt_lang.empty()) {
      fail(ErrorKind::config, "dataset.flores_dir must follow src_lang and tgt_lang");
    }
    auto spec = flores_devtest(path(value), cfg.dataset.src_lang, cfg.dataset.tgt_lang);
    if (cfg.dataset.name.empty()) cfg.dataset.name = spec.name;
    cfg.dataset.src_path = spec.src_path;
    cfg.dataset.ref_path = spec.ref_path;
  } else if (key == "harness.output") {
    cfg.output = path(value);
  } else if (key == "harness.dev_src") {
    cfg.dev_src = path(value);
  } else if (key == "harness.dev_ref") {
    cfg.dev_ref = path(value);
  } else if (auto it = kSetters.find(key); it != kSetters.end()) {
    it->second(cfg, value);
  } else {
    fail(ErrorKind::config, "unknown config key '" + key + "'");
  }
}

/// Fills in what a dataset name implies (WMT test set sizes).
inline void apply_dataset_defaults(RunConfig& cfg) {
  for (const auto& t : kWmtEnDe) {
    if (cfg.dataset.name == t.name && !cfg.dataset.expected_size) cfg.dataset.expected_size = t.size;
  }
}

inline void parse_config(std::istream& in, RunConfig& cfg, const std::filesystem::path& base_dir = {}) {
  std::string line;
  std::string section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(ErrorKind::config, "line " + std::to_string(lineno) + ": unterminated section");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    apply_setting(cfg, section.empty() ? key : section + "." + key, value, base_dir);
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read config " + path.string());
  RunConfig cfg;
  parse_config(in, cfg, path.parent_path());
  apply_dataset_defaults(cfg);
  return cfg;
}

/// LEXICHAIN_API_KEY, LEXICHAIN_BASE_URL and LEXICHAIN_MOCK_SCRIPT override
/// file values. Flags are applied by the caller afterwards.
inline void apply_env(BackendConfig& backend) {
  if (const char* v = std::getenv("LEXICHAIN_API_KEY"); v && *v) backend.api_key = "env:LEXICHAIN_API_KEY";
  if (const char* v = std::getenv("LEXICHAIN_BASE_URL"); v && *v) backend.base_url = v;
  if (const char* v = std::getenv("LEXICHAIN_MOCK_SCRIPT"); v && *v) backend.mock_script = v;
}

}  // namespace lexichain
