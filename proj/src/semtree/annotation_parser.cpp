#include "space3/semtree/annotation_parser.hpp"

namespace space3::semtree {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::vector<corpus::ActAnnotation> parse() {
    std::vector<corpus::ActAnnotation> out;
    skip_ws();
    if (done()) return out;
    out.push_back(act());
    skip_ws();
    while (!done()) {
      expect(';');
      skip_ws();
      out.push_back(act());
      skip_ws();
    }
    return out;
  }

 private:
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw AnnotationParseError(what, pos_ + 1);
  }

  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) {
      fail(done() ? std::string("expected '") + c + "' but input ended"
                  : std::string("expected '") + c + "' but found '" + peek() + "'");
    }
    ++pos_;
  }

  // Reads until one of the stop characters; the result is trimmed.
  std::string field(std::string_view stops, const char* what) {
    std::size_t start = pos_;
    while (!done() && stops.find(peek()) == std::string_view::npos) ++pos_;
    std::string s = corpus::normalize_label(text_.substr(start, pos_ - start));
    if (s.empty()) {
      pos_ = start;
      fail(std::string("empty ") + what);
    }
    return s;
  }

  corpus::ActAnnotation act() {
    corpus::ActAnnotation ann;
    ann.domain = field("-();,=", "domain");
    expect('-');
    ann.intent = field("();,=", "intent");
    skip_ws();
    if (peek() != '(') return ann;
    ++pos_;
    skip_ws();
    if (peek() == ')') {
      ++pos_;
      return ann;
    }
    while (true) {
      skip_ws();
      corpus::SlotValue sv;
      sv.slot = field("=,);", "slot");
      if (peek() == '=') {
        ++pos_;
        std::string v = field(",);", "value");
        if (v != "?") sv.value = std::move(v);
      }
      ann.slots.push_back(std::move(sv));
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(')');
      return ann;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<corpus::ActAnnotation> parse_annotations(std::string_view text) {
  return Parser(text).parse();
}

std::string format_annotations(const std::vector<corpus::ActAnnotation>& annotations) {
  std::string out;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (i) out += "; ";
    out += a.domain + "-" + a.intent + "(";
    for (std::size_t s = 0; s < a.slots.size(); ++s) {
      if (s) out += ", ";
      out += a.slots[s].slot + "=" + a.slots[s].value.value_or("?");
    }
    out += ")";
  }
  return out;
}

}  // namespace space3::semtree
