// lexichain: command-line front end for the constrained translation pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lexichain/config.hpp"
#include "lexichain/harness.hpp"

using namespace lexichain;

namespace {

enum Exit { kOk = 0, kInput = 2, kBackend = 3, kRun = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::transport:
    case ErrorKind::protocol:
    case ErrorKind::script_exhausted:
    case ErrorKind::empty_translation:
      return kBackend;
    case ErrorKind::run_failed:
    case ErrorKind::comparison:
      return kRun;
    default:
      return kInput;
  }
}

int report_error(const Error& e) {
  std::cerr << "lexichain: " << to_string(e.kind()) << ": " << e.what() << '\n';
  return exit_code(e.kind());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct IngestArgs {
  std::string dict, src, tgt, out, cache, config;
};

int cmd_ingest(const IngestArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_config(a.config);
  apply_env(cfg.backend);
  auto gateway = make_gateway(cfg.backend);
  auto ingested = ingest_dictionary(a.dict, a.src, a.tgt);
  std::optional<std::filesystem::path> cache;
  if (!a.cache.empty()) cache = a.cache;
  auto built = embed_all(ingested.index, *gateway, cache);
  built.index.save(a.out);
  std::cout << built.index.entries().size() << " entries, " << built.index.vector_count() << " vectors\n"
            << ingested.skipped_lines << " lines skipped\n"
            << built.computed << " embeddings computed, " << built.cache_hits << " from cache\n";
  return kOk;
}

struct TranslateArgs {
  std::string text, src, tgt, index, policy, config;
  int max_iters = 0;
  bool json = false;
};

int cmd_translate(const TranslateArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_config(a.config);
  apply_env(cfg.backend);
  if (!a.index.empty()) cfg.index_path = a.index;
  if (!a.policy.empty()) cfg.policy = KeywordPolicy::parse(a.policy);
  if (a.max_iters > 0) cfg.max_iters = a.max_iters;
  cfg.dataset.src_lang = a.src;
  cfg.dataset.tgt_lang = a.tgt;
  cfg.validate();

  auto gateway = make_gateway(cfg.backend);
  std::optional<LexiconIndex> index;
  if (cfg.policy.kind != KeywordPolicy::Kind::none) {
    index = load_compatible_index(cfg.index_path, a.src, a.tgt, *gateway);
  }
  PipelineContext ctx;
  ctx.policy = cfg.policy;
  ctx.index = index ? &*index : nullptr;
  ctx.nn_threshold = cfg.nn_threshold;
  ctx.chain.max_iters = cfg.effective_max_iters();

  RunRecord rec = process_sentence(0, {a.text, ""}, a.src, a.tgt, ctx, *gateway);
  rec.fingerprint = cfg.fingerprint();
  if (a.json) {
    std::cout << rec.to_json().dump() << '\n';
  } else if (rec.ok()) {
    std::cout << rec.chain->best_text << '\n';
  }
  if (!rec.ok()) {
    std::cerr << "lexichain: " << to_string(*rec.error_kind) << ": " << rec.error << '\n';
    return exit_code(*rec.error_kind);
  }
  return kOk;
}

struct EvaluateArgs {
  std::string config, output, label, policy;
  int max_iters = 0;
  bool no_self_check = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  RunConfig cfg = load_config(a.config);
  apply_env(cfg.backend);
  if (!a.output.empty()) cfg.output = a.output;
  if (!a.label.empty()) cfg.label = a.label;
  if (!a.policy.empty()) cfg.policy = KeywordPolicy::parse(a.policy);
  if (a.max_iters > 0) cfg.max_iters = a.max_iters;
  if (a.no_self_check) cfg.self_check_enabled = false;

  RunSummary s = run_batch(cfg);
  char buf[128];
  if (s.bleu) {
    std::snprintf(buf, sizeof buf, "BLEU = %.2f", s.bleu->score);
    std::cout << buf << "  " << metrics::BleuConfig{}.signature() << '\n';
  }
  if (s.chrf) {
    std::snprintf(buf, sizeof buf, "chrF++ = %.2f", s.chrf->score);
    std::cout << buf << "  " << metrics::ChrfConfig{}.signature() << '\n';
  }
  std::cout << s.succeeded << "/" << s.sentences << " sentences translated, " << s.failed << " failed\n"
            << "run file: " << s.path.string() << '\n';
  if (s.run_failed) {
    std::cerr << "lexichain: run-failed: " << s.failed << " of " << s.sentences
              << " sentences failed (threshold " << cfg.failure_threshold << ")\n";
    return kRun;
  }
  return kOk;
}

struct ReportArgs {
  std::string runs, labels, csv, out;
  bool by_dataset = false;
};

int cmd_report(const ReportArgs& a) {
  const auto paths = split_list(a.runs);
  const auto labels = split_list(a.labels);
  if (!labels.empty() && labels.size() != paths.size()) {
    fail(ErrorKind::comparison, "got " + std::to_string(paths.size()) + " runs but " + std::to_string(labels.size()) +
                                    " labels");
  }
  std::vector<RunFileView> runs;
  for (size_t i = 0; i < paths.size(); ++i) {
    runs.push_back(read_run_file(paths[i]));
    if (!labels.empty()) runs.back().label = labels[i];
  }
  Report r = report(runs, a.by_dataset ? ReportRows::dataset : ReportRows::pair);
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) fail(ErrorKind::io, "cannot write " + path);
  };
  if (a.out.empty()) {
    std::cout << r.markdown;
  } else {
    write(a.out, r.markdown);
  }
  if (!a.csv.empty()) write(a.csv, r.csv);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terminology-constrained translation with dictionary retrieval and self-checking"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest-dict", "Build an embedded dictionary index");
  c_ingest->add_option("--dict", ingest.dict, "Dictionary file, one `source target` pair per line")->required();
  c_ingest->add_option("--src", ingest.src, "Source language code")->required();
  c_ingest->add_option("--tgt", ingest.tgt, "Target language code")->required();
  c_ingest->add_option("--out", ingest.out, "Index file to write")->required();
  c_ingest->add_option("--embed-cache", ingest.cache, "Embedding cache sidecar (JSON lines)");
  c_ingest->add_option("--config", ingest.config, "Config file for gateway settings");

  TranslateArgs tr;
  auto* c_tr = app.add_subcommand("translate", "Translate one sentence");
  c_tr->add_option("--text", tr.text, "Source sentence")->required();
  c_tr->add_option("--src", tr.src, "Source language code")->required();
  c_tr->add_option("--tgt", tr.tgt, "Target language code")->required();
  c_tr->add_option("--index", tr.index, "Dictionary index built by ingest-dict");
  c_tr->add_option("--policy", tr.policy, "Keyword policy: none, fixed:K, random:K:SEED, llm, llm:K");
  c_tr->add_option("--max-iters", tr.max_iters, "Translation attempts including self-check revisions");
  c_tr->add_option("--config", tr.config, "Config file");
  c_tr->add_flag("--json", tr.json, "Print the full run record");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Run a dataset and score it");
  c_ev->add_option("--config", ev.config, "Config file")->required();
  c_ev->add_option("--output", ev.output, "Run file (overrides harness.output)");
  c_ev->add_option("--label", ev.label, "Run label");
  c_ev->add_option("--policy", ev.policy, "Keyword policy override");
  c_ev->add_option("--max-iters", ev.max_iters, "max_iters override");
  c_ev->add_flag("--no-self-check", ev.no_self_check, "Stop after the first translation");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Compare run files as a Markdown table");
  c_rep->add_option("--runs", rep.runs, "Comma-separated run files")->required();
  c_rep->add_option("--labels", rep.labels, "Comma-separated labels, one per run");
  c_rep->add_option("--csv", rep.csv, "Also write CSV here");
  c_rep->add_option("--out", rep.out, "Write Markdown here instead of stdout");
  c_rep->add_flag("--by-dataset", rep.by_dataset, "One row per dataset with a Size column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInput;
  }

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_tr) return cmd_translate(tr);
    if (*c_ev) return cmd_evaluate(ev);
    if (*c_rep) return cmd_report(rep);
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "lexichain: " << e.what() << '\n';
    return kInput;
  }
  return kOk;
}
