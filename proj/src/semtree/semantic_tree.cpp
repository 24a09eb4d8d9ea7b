#include "space3/semtree/semantic_tree.hpp"

#include <algorithm>

namespace space3::semtree {

std::size_t subtree_size(const Node& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += subtree_size(c);
  return n;
}

std::size_t SemanticTree::size() const { return subtree_size(root); }

namespace {

std::string label_or_null(const std::string& raw) {
  std::string s = corpus::normalize_label(raw);
  return s.empty() ? std::string(kNullLabel) : s;
}

Node& child(Node& parent, const std::string& label, Layer layer) {
  for (auto& c : parent.children) {
    if (c.label == label) return c;
  }
  parent.children.push_back({label, layer, {}});
  return parent.children.back();
}

Node null_chain(Layer from) {
  Node leaf{kNullLabel, Layer::kValue, {}};
  for (int l = static_cast<int>(Layer::kValue) - 1; l >= static_cast<int>(from); --l) {
    Node up{kNullLabel, static_cast<Layer>(l), {}};
    up.children.push_back(std::move(leaf));
    leaf = std::move(up);
  }
  return leaf;
}

}  // namespace

SemanticTree build_semantic_tree(const std::vector<corpus::ActAnnotation>& annotations) {
  SemanticTree tree;
  if (annotations.empty()) {
    tree.root.children.push_back(null_chain(Layer::kDomain));
    return tree;
  }
  for (const auto& ann : annotations) {
    Node& domain = child(tree.root, label_or_null(ann.domain), Layer::kDomain);
    Node& intent = child(domain, label_or_null(ann.intent), Layer::kIntent);
    if (ann.slots.empty()) {
      Node& slot = child(intent, kNullLabel, Layer::kSlot);
      child(slot, kNullLabel, Layer::kValue);
      continue;
    }
    for (const auto& sv : ann.slots) {
      Node& slot = child(intent, label_or_null(sv.slot), Layer::kSlot);
      child(slot, sv.value ? label_or_null(*sv.value) : std::string(kNullLabel),
            Layer::kValue);
    }
  }
  return tree;
}

Node canonicalize(Node node) {
  for (auto& c : node.children) c = canonicalize(std::move(c));
  std::stable_sort(node.children.begin(), node.children.end(),
                   [](const Node& a, const Node& b) { return a.label < b.label; });
  return node;
}

SemanticTree canonicalize(SemanticTree tree) {
  tree.root = canonicalize(std::move(tree.root));
  return tree;
}

bool is_canonical(const Node& node) {
  for (std::size_t i = 1; i < node.children.size(); ++i) {
    if (node.children[i].label < node.children[i - 1].label) return false;
  }
  return std::all_of(node.children.begin(), node.children.end(),
                     [](const Node& c) { return is_canonical(c); });
}

std::string to_string(const Node& node) {
  std::string s = node.label;
  if (!node.children.empty()) {
    s += '(';
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      if (i) s += ',';
      s += to_string(node.children[i]);
    }
    s += ')';
  }
  return s;
}

}  // namespace space3::semtree
