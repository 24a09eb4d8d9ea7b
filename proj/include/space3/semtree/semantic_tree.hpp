#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "space3/corpus/dialog.hpp"

namespace space3::semtree {

enum class Layer { kRoot = 0, kDomain, kIntent, kSlot, kValue };

inline constexpr const char* kRootLabel = "ROOT";
// Reserved label for an absent annotation element.
inline constexpr const char* kNullLabel = "NULL";

struct Node {
  std::string label;
  Layer layer = Layer::kRoot;
  std::vector<Node> children;

  bool operator==(const Node&) const = default;
};

struct SemanticTree {
  Node root{kRootLabel, Layer::kRoot, {}};

  /// Node count including ROOT.
  std::size_t size() const;
  bool operator==(const SemanticTree&) const = default;
};

std::size_t subtree_size(const Node& node);

/// ROOT -> DOMAIN -> INTENT -> SLOT -> VALUE. Each layer holds the distinct
/// annotation elements under its parent; missing elements become NULL nodes,
/// so every root-to-leaf path has five nodes.
SemanticTree build_semantic_tree(const std::vector<corpus::ActAnnotation>& annotations);

/// Recursively sorts siblings by label (byte order).
SemanticTree canonicalize(SemanticTree tree);
Node canonicalize(Node node);
bool is_canonical(const Node& node);
inline bool is_canonical(const SemanticTree& t) { return is_canonical(t.root); }

/// Compact bracket notation, e.g. "ROOT(restaurant(inform(food(indian))))".
std::string to_string(const Node& node);
inline std::string to_string(const SemanticTree& t) { return to_string(t.root); }

}  // namespace space3::semtree
