#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lexichain/error.hpp"
#include "lexichain/languages.hpp"

namespace lexichain {

struct DatasetSpec {
  std::string name;
  std::filesystem::path src_path;
  std::filesystem::path ref_path;
  std::string src_lang;
  std::string tgt_lang;
  std::optional<size_t> expected_size;
};

struct SentencePair {
  std::string source;
  std::string reference;
};

/// Lines of a UTF-8 file with the line terminator removed. A final
/// terminator does not start an extra empty line.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline std::vector<SentencePair> load_dataset(const DatasetSpec& spec) {
  const auto src = read_lines(spec.src_path);
  const auto ref = read_lines(spec.ref_path);
  if (src.size() != ref.size()) {
    fail(ErrorKind::alignment, spec.src_path.string() + " has " + std::to_string(src.size()) + " lines but " +
                                   spec.ref_path.string() + " has " + std::to_string(ref.size()));
  }
  if (spec.expected_size && *spec.expected_size != src.size()) {
    fail(ErrorKind::size, "dataset '" + spec.name + "' should have " + std::to_string(*spec.expected_size) +
                              " lines, found " + std::to_string(src.size()));
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (size_t i = 0; i < src.size(); ++i) pairs.push_back({src[i], ref[i]});
  return pairs;
}

/// FLORES-200 devtest pair laid out as {dir}/{flores_code}.devtest.
inline DatasetSpec flores_devtest(const std::filesystem::path& dir, const std::string& src_iso,
                                  const std::string& tgt_iso) {
  auto src = find_language(src_iso);
  auto tgt = find_language(tgt_iso);
  if (!src || !tgt) fail(ErrorKind::config, "no FLORES code registered for " + (src ? tgt_iso : src_iso));
  return {"flores200-devtest-" + src_iso + "-" + tgt_iso,
          dir / (std::string(src->flores_code) + ".devtest"),
          dir / (std::string(tgt->flores_code) + ".devtest"),
          src_iso,
          tgt_iso,
          std::nullopt};
}

struct WmtTestSet {
  std::string_view name;
  size_t size;
};

// EN->DE general test sets.
inline constexpr WmtTestSet kWmtEnDe[] = {{"wmt22", 2037}, {"wmt23", 557}, {"wmt24", 998}};

inline DatasetSpec wmt_en_de(std::string_view name, const std::filesystem::path& src_path,
                             const std::filesystem::path& ref_path) {
  for (const auto& t : kWmtEnDe) {
    if (t.name == name) return {std::string(name), src_path, ref_path, "en", "de", t.size};
  }
  fail(ErrorKind::config, "unknown WMT test set '" + std::string(name) + "'");
}

}  // namespace lexichain
