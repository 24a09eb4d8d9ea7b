#include "space3/corpus/cleaning.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace space3::corpus {

std::string_view clean_rule_name(CleanRule rule) {
  switch (rule) {
    case CleanRule::kUrl: return "url";
    case CleanRule::kRepeatedWords: return "repeated_words";
    case CleanRule::kNonEnglish: return "non_english";
    case CleanRule::kMarkup: return "markup";
    case CleanRule::kOffensive: return "offensive";
    case CleanRule::kEmptyText: return "empty_text";
  }
  return "unknown";
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word list: " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = normalize_label(line);
    if (w.empty() || w[0] == '#') continue;
    words.insert(std::move(w));
  }
  return words;
}

namespace {

// Decodes one code point starting at text[i]. Returns the number of bytes
// consumed; sets cp to 0xFFFFFFFF on malformed input (consuming one byte).
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  constexpr char32_t kInvalid = 0xFFFFFFFF;
  auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = kInvalid;
    return 1;
  }
  if (i + len > text.size()) {
    cp = kInvalid;
    return 1;
  }
  for (std::size_t k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = kInvalid;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    cp = kInvalid;
    return 1;
  }
  return len;
}

bool is_unrenderable(char32_t cp) {
  if (cp == 0xFFFFFFFF || cp == 0xFFFD) return true;
  if (cp < 0x20) return cp != '\t' && cp != '\n' && cp != '\r';
  if (cp == 0x7F) return true;
  return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // emoji, pictographs, flags
         (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
         (cp >= 0x2B00 && cp <= 0x2BFF) ||
         (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
         cp == 0x200D || cp == 0x20E3 ||
         (cp >= 0xE000 && cp <= 0xF8FF) ||    // private use
         (cp >= 0xE0000 && cp <= 0xE007F) ||  // tags
         cp >= 0xF0000;
}

bool is_non_ascii_letter(char32_t cp) {
  return (cp >= 0x00C0 && cp <= 0x024F && cp != 0xD7 && cp != 0xF7) ||
         (cp >= 0x0370 && cp <= 0x1FFF) || (cp >= 0x3040 && cp <= 0x9FFF) ||
         (cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0xF900 && cp <= 0xFAFF);
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

// Lowercased whitespace-separated words with leading/trailing punctuation
// stripped; pure-punctuation tokens are dropped.
std::vector<std::string> plain_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) {
    std::size_t b = 0, e = w.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(w[e - 1]))) --e;
    if (b == e) continue;
    std::string core = w.substr(b, e - b);
    for (auto& c : core) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.push_back(std::move(core));
  }
  return words;
}

}  // namespace

std::string replace_unrenderable(std::string_view text, std::string_view placeholder,
                                 std::size_t* replaced_runs) {
  std::string out;
  out.reserve(text.size());
  bool in_run = false;
  std::size_t runs = 0;
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp;
    std::size_t len = decode_utf8(text, i, cp);
    if (is_unrenderable(cp)) {
      if (!in_run) {
        out.push_back(' ');
        out.append(placeholder);
        out.push_back(' ');
        ++runs;
      }
      in_run = true;
    } else {
      in_run = false;
      out.append(text.substr(i, len));
    }
    i += len;
  }
  if (replaced_runs) *replaced_runs += runs;
  return collapse_whitespace(out);
}

bool contains_url(std::string_view text) {
  static const std::regex kUrl(
      R"(((https?|ftp)://)|(www\.)|(\b[a-z0-9-]+\.(com|org|net|edu|gov|io|co|uk|de|ly|me|info|biz)\b))",
      std::regex::ECMAScript | std::regex::icase);
  return std::regex_search(text.begin(), text.end(), kUrl);
}

bool has_repeated_words(std::string_view text, std::size_t run_length) {
  auto words = plain_words(text);
  std::size_t run = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    run = (i > 0 && words[i] == words[i - 1]) ? run + 1 : 1;
    if (run >= run_length) return true;
  }
  return false;
}

bool looks_english(std::string_view text, double min_ascii_ratio) {
  std::size_t ascii = 0, other = 0;
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp;
    i += decode_utf8(text, i, cp);
    if (cp < 0x80) {
      if (std::isalpha(static_cast<int>(cp))) ++ascii;
    } else if (is_non_ascii_letter(cp)) {
      ++other;
    }
  }
  if (ascii + other == 0) return true;
  return static_cast<double>(ascii) / static_cast<double>(ascii + other) >= min_ascii_ratio;
}

bool has_markup(std::string_view text) {
  return text.find('[') != std::string_view::npos ||
         text.find(']') != std::string_view::npos;
}

bool has_offensive_word(std::string_view text,
                        const std::unordered_set<std::string>& words) {
  if (words.empty()) return false;
  for (const auto& w : plain_words(text)) {
    if (words.count(w)) return true;
  }
  return false;
}

CleanOutcome clean_dialog_detailed(const Dialog& dialog, const CleaningConfig& config) {
  CleanOutcome outcome;
  Dialog cleaned = dialog;
  for (auto& turn : cleaned.turns) {
    turn.text = replace_unrenderable(turn.text, config.emoji_placeholder,
                                     &outcome.replaced_runs);
  }
  auto reject = [&](CleanRule rule) {
    outcome.rejected_by = rule;
    return outcome;
  };
  for (const auto& turn : cleaned.turns) {
    if (contains_url(turn.text)) return reject(CleanRule::kUrl);
  }
  for (const auto& turn : cleaned.turns) {
    if (has_repeated_words(turn.text, config.max_repeat_run)) {
      return reject(CleanRule::kRepeatedWords);
    }
  }
  for (const auto& turn : cleaned.turns) {
    if (!looks_english(turn.text, config.min_ascii_alpha_ratio)) {
      return reject(CleanRule::kNonEnglish);
    }
  }
  for (const auto& turn : cleaned.turns) {
    if (has_markup(turn.text)) return reject(CleanRule::kMarkup);
  }
  for (const auto& turn : cleaned.turns) {
    if (has_offensive_word(turn.text, config.offensive_words)) {
      return reject(CleanRule::kOffensive);
    }
  }
  for (const auto& turn : cleaned.turns) {
    if (turn.text.empty()) return reject(CleanRule::kEmptyText);
  }
  outcome.dialog = std::move(cleaned);
  return outcome;
}

void CleaningReport::add(const CleanOutcome& outcome) {
  ++input_dialogs;
  replaced_runs += outcome.replaced_runs;
  if (outcome.rejected_by) {
    ++rejected[static_cast<std::size_t>(*outcome.rejected_by)];
  } else {
    ++kept_dialogs;
  }
}

nlohmann::json CleaningReport::to_json() const {
  nlohmann::json rules = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumCleanRules; ++i) {
    rules[std::string(clean_rule_name(static_cast<CleanRule>(i)))] = rejected[i];
  }
  return {{"input_dialogs", input_dialogs},
          {"kept_dialogs", kept_dialogs},
          {"replaced_character_runs", replaced_runs},
          {"rejected", rules}};
}

std::vector<Dialog> clean_corpus(const std::vector<Dialog>& dialogs,
                                 const CleaningConfig& config, CleaningReport& report) {
  std::vector<Dialog> kept;
  kept.reserve(dialogs.size());
  for (const auto& d : dialogs) {
    auto outcome = clean_dialog_detailed(d, config);
    report.add(outcome);
    if (outcome.dialog) kept.push_back(std::move(*outcome.dialog));
  }
  return kept;
}

}  // namespace space3::corpus
