#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace space3::corpus {

enum class Speaker { kUser, kSystem };
enum class Source { kLabeled, kUnlabeled };

struct SlotValue {
  std::string slot;
  // nullopt is the absent marker ("?" in annotation strings, null in JSON).
  std::optional<std::string> value;

  bool operator==(const SlotValue&) const = default;
};

struct ActAnnotation {
  std::string domain;
  std::string intent;
  std::vector<SlotValue> slots;

  bool operator==(const ActAnnotation&) const = default;
};

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string text;
  // Present on every turn of a labeled dialog (possibly empty), absent on
  // unlabeled ones.
  std::optional<std::vector<ActAnnotation>> annotations;

  bool operator==(const Turn&) const = default;
};

struct Dialog {
  std::string dialog_id;
  std::vector<Turn> turns;
  Source source = Source::kUnlabeled;

  // Number of <user, system> pairs; a trailing user turn without a reply
  // does not form a pair.
  std::size_t num_pairs() const { return turns.size() / 2; }

  bool operator==(const Dialog&) const = default;
};

struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<Dialog> dialogs;
  std::vector<Diagnostic> diagnostics;
};

/// Lowercases and trims an annotation label.
std::string normalize_label(std::string_view label);

/// Validates one JSON record against the corpus schema. Throws
/// std::invalid_argument describing the first violation.
Dialog dialog_from_json(const nlohmann::json& record, Source source);
nlohmann::json dialog_to_json(const Dialog& dialog);

/// Reads a line-delimited JSON corpus. Blank lines are ignored, records that
/// fail validation are skipped and reported by line number. Throws
/// std::runtime_error when the file cannot be opened.
LoadResult load_corpus(const std::filesystem::path& path, Source source);

void write_corpus(const std::filesystem::path& path,
                  const std::vector<Dialog>& dialogs);

nlohmann::json annotation_to_json(const ActAnnotation& ann);
ActAnnotation annotation_from_json(const nlohmann::json& j);

}  // namespace space3::corpus
