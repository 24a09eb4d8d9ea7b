#include "space3/semtree/similarity.hpp"

#include <algorithm>
#include <stdexcept>

#include "space3/semtree/tree_edit_distance.hpp"

namespace space3::semtree {

double similarity_from_distance(std::size_t size_a, std::size_t size_b, std::size_t distance) {
  const double m = static_cast<double>(std::max(size_a, size_b));
  return std::max(0.0, (m - static_cast<double>(distance)) / m);
}

double similarity_coefficient(const SemanticTree& a, const SemanticTree& b) {
  return similarity_from_distance(a.size(), b.size(), tree_edit_distance(a, b));
}

SimilarityMatrix batch_similarity_matrix(const std::vector<SemanticTree>& trees) {
  if (trees.empty()) throw std::invalid_argument("similarity matrix needs at least one tree");
  std::vector<SemanticTree> canon;
  canon.reserve(trees.size());
  for (const auto& t : trees) canon.push_back(canonicalize(t));

  SimilarityMatrix m;
  m.n = canon.size();
  m.f.assign(m.n * m.n, 1.0);
  m.d.assign(m.n * m.n, 0);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = i + 1; j < m.n; ++j) {
      std::size_t d = canon[i] == canon[j] ? 0 : tree_edit_distance(canon[i], canon[j]);
      double f = similarity_from_distance(canon[i].size(), canon[j].size(), d);
      m.d[i * m.n + j] = m.d[j * m.n + i] = d;
      m.f[i * m.n + j] = m.f[j * m.n + i] = f;
    }
  }
  return m;
}

SimilarityMatrix duplicate_for_augmentation(const SimilarityMatrix& base) {
  SimilarityMatrix out;
  out.n = 2 * base.n;
  out.f.resize(out.n * out.n);
  out.d.resize(out.n * out.n);
  for (std::size_t i = 0; i < out.n; ++i) {
    for (std::size_t j = 0; j < out.n; ++j) {
      out.f[i * out.n + j] = base.coef(i % base.n, j % base.n);
      out.d[i * out.n + j] = base.dist(i % base.n, j % base.n);
    }
  }
  return out;
}

}  // namespace space3::semtree
