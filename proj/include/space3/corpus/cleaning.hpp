#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "space3/corpus/dialog.hpp"

namespace space3::corpus {

// Rejection reasons, in the order rules are checked. kEmptyText fires when
// character replacement leaves an utterance with no content.
enum class CleanRule {
  kUrl = 0,
  kRepeatedWords,
  kNonEnglish,
  kMarkup,
  kOffensive,
  kEmptyText,
};
inline constexpr std::size_t kNumCleanRules = 6;

std::string_view clean_rule_name(CleanRule rule);

struct CleaningConfig {
  // Replacement for each run of emoji / unrenderable code points.
  std::string emoji_placeholder;
  // Minimum share of alphabetic characters that must be ASCII.
  double min_ascii_alpha_ratio = 0.8;
  // Minimum run length of the same word that rejects an utterance.
  std::size_t max_repeat_run = 3;
  std::unordered_set<std::string> offensive_words;
};

/// Loads one lowercase word per line; blank lines and lines starting with '#'
/// are ignored.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);

struct CleanOutcome {
  std::optional<Dialog> dialog;
  std::optional<CleanRule> rejected_by;
  std::size_t replaced_runs = 0;
};

/// Replaces emoji and other unrenderable code points (including invalid UTF-8
/// bytes) by the placeholder and collapses whitespace.
std::string replace_unrenderable(std::string_view text, std::string_view placeholder,
                                 std::size_t* replaced_runs = nullptr);

bool contains_url(std::string_view text);
bool has_repeated_words(std::string_view text, std::size_t run_length);
bool looks_english(std::string_view text, double min_ascii_ratio);
bool has_markup(std::string_view text);
bool has_offensive_word(std::string_view text,
                        const std::unordered_set<std::string>& words);

CleanOutcome clean_dialog_detailed(const Dialog& dialog, const CleaningConfig& config);

inline std::optional<Dialog> clean_dialog(const Dialog& dialog,
                                          const CleaningConfig& config = {}) {
  return clean_dialog_detailed(dialog, config).dialog;
}

struct CleaningReport {
  std::size_t input_dialogs = 0;
  std::size_t kept_dialogs = 0;
  std::size_t replaced_runs = 0;
  std::array<std::size_t, kNumCleanRules> rejected{};

  void add(const CleanOutcome& outcome);
  nlohmann::json to_json() const;
};

std::vector<Dialog> clean_corpus(const std::vector<Dialog>& dialogs,
                                 const CleaningConfig& config, CleaningReport& report);

}  // namespace space3::corpus
