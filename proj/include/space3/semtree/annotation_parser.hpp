#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "space3/corpus/dialog.hpp"

namespace space3::semtree {

class AnnotationParseError : public std::invalid_argument {
 public:
  AnnotationParseError(const std::string& message, std::size_t column)
      : std::invalid_argument(message + " at column " + std::to_string(column)),
        column_(column) {}
  /// 1-based column of the offending character.
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Parses act strings of the form
///   restaurant-inform(food=indian, area=park); restaurant-request(name=?)
/// Segments are joined by ';'. A slot without '=' or with value '?' has an
/// absent value. Parentheses may be omitted for acts without slots.
std::vector<corpus::ActAnnotation> parse_annotations(std::string_view text);

std::string format_annotations(const std::vector<corpus::ActAnnotation>& annotations);

}  // namespace space3::semtree
