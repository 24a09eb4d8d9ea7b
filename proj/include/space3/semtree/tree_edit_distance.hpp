#pragma once

#include <cstddef>

#include "space3/semtree/semantic_tree.hpp"

namespace space3::semtree {

/// Unit-cost ordered tree edit distance (insert, delete, relabel) computed
/// with the Zhang-Shasha keyroot dynamic program. Sibling order matters, so
/// both trees must be canonical; throws std::invalid_argument otherwise.
std::size_t tree_edit_distance(const Node& a, const Node& b);

inline std::size_t tree_edit_distance(const SemanticTree& a, const SemanticTree& b) {
  return tree_edit_distance(a.root, b.root);
}

/// Same dynamic program without the canonical-form precondition.
std::size_t ordered_tree_edit_distance(const Node& a, const Node& b);

}  // namespace space3::semtree
