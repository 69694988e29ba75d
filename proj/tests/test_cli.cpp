#include <sys/wait.h>

#include <cstdio>

#include <gtest/gtest.h>

#include "fixture_runs.hpp"
#include "support.hpp"

using namespace testsupport;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

/// Runs the CLI through the shell; stderr is merged into the output.
Result cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = (env.empty() ? "" : "env " + env + " ") + "\"" + LEXICHAIN_CLI + "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_conf(const fs::path& path, const FixturePair& fx, bool ours, const fs::path& index,
                const fs::path& output) {
  std::string text = "label = " + std::string(ours ? "Ours" : "Baseline") + "\n[gateway]\nmock_script = " +
                     (fx.dir() / "mock_script.json").string() + "\n[dataset]\nname = fixture-" + fx.pair() +
                     "\nsrc = " + (fx.dir() / (fx.src + ".txt")).string() + "\nref = " +
                     (fx.dir() / (fx.tgt + ".txt")).string() + "\nsrc_lang = " + fx.src + "\ntgt_lang = " + fx.tgt +
                     "\n[harness]\noutput = " + output.string() + "\n";
  if (ours) {
    text += "[dictionary]\nindex = " + index.string() + "\n[policy]\nkeywords = llm\n";
  } else {
    text += "[policy]\nkeywords = none\nself_check = false\n";
  }
  write_file(path, text);
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("translate --src en").code, 2);
}

TEST(Cli, IngestMissingDictionary) {
  TempDir d;
  const auto r = cli("ingest-dict --dict /nonexistent.txt --src en --tgt de --out " + q(d / "x.jsonl"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("lexichain: io:"), std::string::npos);
}

TEST(Cli, IngestEmptyDictionary) {
  TempDir d;
  write_file(d / "dict.txt", "\n  \nonlyone\n");
  const auto r = cli("ingest-dict --dict " + q(d / "dict.txt") + " --src en --tgt de --out " + q(d / "x.jsonl"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("lexichain: empty-dictionary:"), std::string::npos);
}

TEST(Cli, IngestUsesCache) {
  TempDir d;
  const std::string env = "LEXICHAIN_MOCK_SCRIPT=" + q(kEnDe.dir() / "mock_script.json");
  const std::string args = "ingest-dict --dict " + q(kEnDe.dir() / "dict.en-de.txt") + " --src en --tgt de --out " +
                           q(d / "idx.jsonl") + " --embed-cache " + q(d / "cache.jsonl");
  auto run = [&] { return cli(args, env); };
  const auto cold = run();
  ASSERT_EQ(cold.code, 0) << cold.out;
  EXPECT_EQ(cold.out.find(" 0 embeddings computed"), std::string::npos);
  EXPECT_NE(cold.out.find("0 lines skipped"), std::string::npos);
  const auto warm = run();
  ASSERT_EQ(warm.code, 0) << warm.out;
  EXPECT_NE(warm.out.find("\n0 embeddings computed"), std::string::npos) << warm.out;
  EXPECT_EQ(read_file(d / "idx.jsonl").empty(), false);
}

class CliFixture : public ::testing::Test {
 protected:
  TempDir dir;
  fs::path index;

  void SetUp() override {
    index = build_fixture_index(kEnDe, dir.path());
    write_conf(dir / "ours.conf", kEnDe, true, index, dir / "ours.jsonl");
    write_conf(dir / "base.conf", kEnDe, false, index, dir / "base.jsonl");
  }
};

TEST_F(CliFixture, TranslateOneSentence) {
  const auto src = lexichain::read_lines(kEnDe.dir() / "en.txt");
  const auto r = cli("translate --config " + q(dir / "ours.conf") + " --src en --tgt de --text '" + src[0] + "'");
  ASSERT_EQ(r.code, 0) << r.out;

  const auto j = cli("translate --json --config " + q(dir / "ours.conf") + " --src en --tgt de --text '" + src[0] +
                     "'");
  ASSERT_EQ(j.code, 0) << j.out;
  const auto rec = nlohmann::json::parse(j.out);
  EXPECT_EQ(rec["status"], "ok");
  EXPECT_FALSE(rec["constraints"].empty());
  EXPECT_EQ(r.out, rec["best_text"].get<std::string>() + "\n");
}

TEST_F(CliFixture, TranslateBackendErrorExitsThree) {
  const auto src = lexichain::read_lines(kEnDe.dir() / "en.txt");
  const auto r = cli("translate --config " + q(dir / "ours.conf") + " --src en --tgt de --text '" + src[17] + "'");
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("lexichain: transport:"), std::string::npos);
}

TEST_F(CliFixture, TranslateIndexPairMismatch) {
  const auto r = cli("translate --config " + q(dir / "ours.conf") + " --src en --tgt nl --text 'The dog.'");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("config"), std::string::npos);
}

TEST_F(CliFixture, EvaluateAndReport) {
  const auto ours = cli("evaluate --config " + q(dir / "ours.conf"));
  ASSERT_EQ(ours.code, 0) << ours.out;
  EXPECT_NE(ours.out.find("BLEU = 78.58  nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp|version:"), std::string::npos)
      << ours.out;
  EXPECT_NE(ours.out.find("chrF++ = 87.08  nrefs:1|case:mixed|eff:yes|nc:6|nw:2|space:no|version:"),
            std::string::npos);
  EXPECT_NE(ours.out.find("49/50 sentences translated, 1 failed"), std::string::npos);

  const auto base = cli("evaluate --config " + q(dir / "base.conf"));
  ASSERT_EQ(base.code, 0) << base.out;

  const auto rep = cli("report --runs " + q(dir / "base.jsonl") + "," + q(dir / "ours.jsonl") +
                       " --labels Baseline,Ours --csv " + q(dir / "r.csv"));
  ASSERT_EQ(rep.code, 0) << rep.out;
  EXPECT_EQ(rep.out,
            "| Language | BLEU Baseline | BLEU Ours | chrF++ Baseline | chrF++ Ours |\n"
            "|---|---:|---:|---:|---:|\n"
            "| en-de | 56.04 | **78.58** | 73.99 | **87.08** |\n");
  EXPECT_EQ(read_file(dir / "r.csv").rfind("pair,metric,run_label,score\n", 0), 0u);

  const auto dup = cli("report --runs " + q(dir / "ours.jsonl") + "," + q(dir / "ours.jsonl"));
  EXPECT_EQ(dup.code, 4);
  EXPECT_NE(dup.out.find("lexichain: comparison:"), std::string::npos);
  EXPECT_EQ(cli("report --runs " + q(dir / "ours.jsonl") + " --labels A,B").code, 4);
}

TEST_F(CliFixture, EvaluateOverridesAndRunFailure) {
  const auto r = cli("evaluate --config " + q(dir / "ours.conf") + " --no-self-check --label Single --output " +
                     q(dir / "single.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto header = nlohmann::json::parse(read_file(dir / "single.jsonl").substr(0, read_file(dir / "single.jsonl").find('\n')));
  EXPECT_EQ(header["config"]["label"], "Single");
  EXPECT_EQ(header["config"]["policy"]["max_iters"], 1);

  write_file(dir / "strict.conf", read_file(dir / "ours.conf") + "[harness]\nfailure_threshold = 0\n");
  const auto strict = cli("evaluate --config " + q(dir / "strict.conf"));
  EXPECT_EQ(strict.code, 4) << strict.out;
  EXPECT_NE(strict.out.find("lexichain: run-failed:"), std::string::npos);
}

TEST_F(CliFixture, ConfigErrorsExitTwo) {
  write_file(dir / "bad.conf", "[gateway]\nnope = 1\n");
  const auto r = cli("evaluate --config " + q(dir / "bad.conf"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("lexichain: config:"), std::string::npos);
  EXPECT_EQ(cli("evaluate --config /nonexistent.conf").code, 2);
}
