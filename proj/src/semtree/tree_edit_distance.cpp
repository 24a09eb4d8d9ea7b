#include "space3/semtree/tree_edit_distance.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace space3::semtree {

namespace {

// Postorder view: nodes numbered 1..n, lml[i] is the leftmost leaf descendant.
struct Postorder {
  std::vector<const std::string*> label{nullptr};
  std::vector<std::size_t> lml{0};
  std::vector<std::size_t> keyroots;

  explicit Postorder(const Node& root) {
    visit(root);
    std::size_t n = label.size() - 1;
    std::vector<bool> seen(n + 1, false);
    for (std::size_t i = n; i >= 1; --i) {
      if (!seen[lml[i]]) {
        keyroots.push_back(i);
        seen[lml[i]] = true;
      }
    }
    std::reverse(keyroots.begin(), keyroots.end());
  }

  std::size_t size() const { return label.size() - 1; }

 private:
  std::size_t visit(const Node& node) {
    std::size_t leftmost = 0;
    for (const auto& c : node.children) {
      std::size_t l = visit(c);
      if (leftmost == 0) leftmost = l;
    }
    label.push_back(&node.label);
    std::size_t self = label.size() - 1;
    lml.push_back(leftmost == 0 ? self : leftmost);
    return lml.back();
  }
};

}  // namespace

std::size_t ordered_tree_edit_distance(const Node& a, const Node& b) {
  Postorder A(a), B(b);
  const std::size_t n = A.size(), m = B.size();
  std::vector<std::vector<std::size_t>> td(n + 1, std::vector<std::size_t>(m + 1, 0));
  std::vector<std::vector<std::size_t>> fd(n + 2, std::vector<std::size_t>(m + 2, 0));

  for (std::size_t i : A.keyroots) {
    for (std::size_t j : B.keyroots) {
      const std::size_t li = A.lml[i], lj = B.lml[j];
      // fd[x][y] holds the distance between forests l(i)..(li+x-1) and
      // l(j)..(lj+y-1); row/column 0 are the empty forests.
      fd[0][0] = 0;
      for (std::size_t x = 1; x <= i - li + 1; ++x) fd[x][0] = fd[x - 1][0] + 1;
      for (std::size_t y = 1; y <= j - lj + 1; ++y) fd[0][y] = fd[0][y - 1] + 1;
      for (std::size_t i1 = li; i1 <= i; ++i1) {
        const std::size_t x = i1 - li + 1;
        for (std::size_t j1 = lj; j1 <= j; ++j1) {
          const std::size_t y = j1 - lj + 1;
          const std::size_t del = fd[x - 1][y] + 1;
          const std::size_t ins = fd[x][y - 1] + 1;
          if (A.lml[i1] == li && B.lml[j1] == lj) {
            const std::size_t rel = fd[x - 1][y - 1] + (*A.label[i1] == *B.label[j1] ? 0 : 1);
            fd[x][y] = std::min({del, ins, rel});
            td[i1][j1] = fd[x][y];
          } else {
            const std::size_t px = A.lml[i1] - li, py = B.lml[j1] - lj;
            fd[x][y] = std::min({del, ins, fd[px][py] + td[i1][j1]});
          }
        }
      }
    }
  }
  return td[n][m];
}

std::size_t tree_edit_distance(const Node& a, const Node& b) {
  if (!is_canonical(a) || !is_canonical(b)) {
    throw std::invalid_argument("tree_edit_distance requires canonical trees");
  }
  return ordered_tree_edit_distance(a, b);
}

}  // namespace space3::semtree
