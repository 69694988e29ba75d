#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace lexichain {

struct LanguageRegistryEntry {
  std::string_view iso;
  std::string_view name;
  std::string_view flores_code;
};

// The ten low-resource evaluation languages plus the English and German
// ends of the evaluated pairs.
inline constexpr std::array<LanguageRegistryEntry, 12> kLanguages{{
    {"ca", "Catalan", "cat_Latn"},
    {"hr", "Croatian", "hrv_Latn"},
    {"da", "Danish", "dan_Latn"},
    {"nl", "Dutch", "nld_Latn"},
    {"tl", "Tagalog", "tgl_Latn"},
    {"id", "Indonesian", "ind_Latn"},
    {"it", "Italian", "ita_Latn"},
    {"ms", "Malay", "zsm_Latn"},
    {"nb", "Norwegian", "nob_Latn"},
    {"sk", "Slovak", "slk_Latn"},
    {"en", "English", "eng_Latn"},
    {"de", "German", "deu_Latn"},
}};

inline std::optional<LanguageRegistryEntry> find_language(std::string_view iso) {
  for (const auto& e : kLanguages) {
    if (e.iso == iso) return e;
  }
  return std::nullopt;
}

inline std::optional<LanguageRegistryEntry> find_language_by_flores(std::string_view flores_code) {
  for (const auto& e : kLanguages) {
    if (e.flores_code == flores_code) return e;
  }
  return std::nullopt;
}

/// English display name for prompts; unknown codes are used verbatim.
inline std::string language_name(std::string_view iso) {
  if (auto e = find_language(iso)) return std::string(e->name);
  return std::string(iso);
}

}  // namespace lexichain
