#include "space3/corpus/dialog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace space3::corpus {

using nlohmann::json;

std::string normalize_label(std::string_view label) {
  auto begin = label.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = label.find_last_not_of(" \t\r\n");
  std::string out(label.substr(begin, end - begin + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

namespace {

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw std::invalid_argument(std::string("missing key '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) {
    throw std::invalid_argument(std::string("key '") + key +
                                "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

ActAnnotation annotation_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("annotation must be an object");
  ActAnnotation ann;
  ann.domain = normalize_label(require_string(j, "domain"));
  ann.intent = normalize_label(require_string(j, "intent"));
  const json& slots = require(j, "slots");
  if (!slots.is_array()) throw std::invalid_argument("'slots' must be an array");
  for (const json& s : slots) {
    if (!s.is_object()) throw std::invalid_argument("slot entry must be an object");
    SlotValue sv;
    sv.slot = normalize_label(require_string(s, "slot"));
    auto it = s.find("value");
    if (it == s.end()) {
      throw std::invalid_argument("missing key 'value'");
    }
    if (it->is_string()) {
      sv.value = normalize_label(it->get<std::string>());
    } else if (!it->is_null()) {
      throw std::invalid_argument("slot value must be a string or null");
    }
    ann.slots.push_back(std::move(sv));
  }
  return ann;
}

json annotation_to_json(const ActAnnotation& ann) {
  json slots = json::array();
  for (const auto& sv : ann.slots) {
    slots.push_back({{"slot", sv.slot},
                     {"value", sv.value ? json(*sv.value) : json(nullptr)}});
  }
  return {{"domain", ann.domain}, {"intent", ann.intent}, {"slots", slots}};
}

Dialog dialog_from_json(const json& record, Source source) {
  if (!record.is_object()) throw std::invalid_argument("record must be an object");
  Dialog d;
  d.source = source;
  d.dialog_id = require_string(record, "dialog_id");
  const json& turns = require(record, "turns");
  if (!turns.is_array() || turns.empty()) {
    throw std::invalid_argument("'turns' must be a non-empty array");
  }
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const json& t = turns[i];
    if (!t.is_object()) throw std::invalid_argument("turn must be an object");
    Turn turn;
    std::string speaker = require_string(t, "speaker");
    if (speaker == "user") {
      turn.speaker = Speaker::kUser;
    } else if (speaker == "system") {
      turn.speaker = Speaker::kSystem;
    } else {
      throw std::invalid_argument("turn " + std::to_string(i) +
                                  ": unknown speaker '" + speaker + "'");
    }
    Speaker expected = i % 2 == 0 ? Speaker::kUser : Speaker::kSystem;
    if (turn.speaker != expected) {
      throw std::invalid_argument("turn " + std::to_string(i) +
                                  ": speakers must alternate starting with user");
    }
    turn.text = require_string(t, "text");
    if (turn.text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw std::invalid_argument("turn " + std::to_string(i) + ": empty text");
    }
    auto ann = t.find("annotations");
    if (ann != t.end()) {
      if (source == Source::kUnlabeled) {
        throw std::invalid_argument("turn " + std::to_string(i) +
                                    ": unlabeled record carries annotations");
      }
      if (!ann->is_array()) {
        throw std::invalid_argument("'annotations' must be an array");
      }
      std::vector<ActAnnotation> anns;
      for (const json& a : *ann) anns.push_back(annotation_from_json(a));
      turn.annotations = std::move(anns);
    } else if (source == Source::kLabeled) {
      turn.annotations = std::vector<ActAnnotation>{};
    }
    d.turns.push_back(std::move(turn));
  }
  return d;
}

json dialog_to_json(const Dialog& dialog) {
  json turns = json::array();
  for (const auto& t : dialog.turns) {
    json jt = {{"speaker", t.speaker == Speaker::kUser ? "user" : "system"},
               {"text", t.text}};
    if (t.annotations) {
      json anns = json::array();
      for (const auto& a : *t.annotations) anns.push_back(annotation_to_json(a));
      jt["annotations"] = anns;
    }
    turns.push_back(std::move(jt));
  }
  return {{"dialog_id", dialog.dialog_id}, {"turns", turns}};
}

LoadResult load_corpus(const std::filesystem::path& path, Source source) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
  LoadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.dialogs.push_back(dialog_from_json(json::parse(line), source));
    } catch (const json::exception& e) {
      result.diagnostics.push_back({lineno, std::string("parse error: ") + e.what()});
    } catch (const std::invalid_argument& e) {
      result.diagnostics.push_back({lineno, e.what()});
    }
  }
  return result;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<Dialog>& dialogs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path.string());
  for (const auto& d : dialogs) out << dialog_to_json(d).dump() << '\n';
}

}  // namespace space3::corpus
