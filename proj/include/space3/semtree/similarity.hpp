#pragma once

#include <cstddef>
#include <vector>

#include "space3/semtree/semantic_tree.hpp"

namespace space3::semtree {

/// f = max(0, (max(|T1|,|T2|) - d) / max(|T1|,|T2|)) on canonical trees.
/// Unit-cost distances can exceed the larger tree size, hence the clamp.
double similarity_coefficient(const SemanticTree& a, const SemanticTree& b);
double similarity_from_distance(std::size_t size_a, std::size_t size_b, std::size_t distance);

/// Row-major square matrices of coefficients f and distances d.
struct SimilarityMatrix {
  std::size_t n = 0;
  std::vector<double> f;
  std::vector<std::size_t> d;

  double coef(std::size_t i, std::size_t j) const { return f[i * n + j]; }
  std::size_t dist(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

/// Pairwise kernel over a batch. Trees are canonicalized first. Throws
/// std::invalid_argument on an empty list.
SimilarityMatrix batch_similarity_matrix(const std::vector<SemanticTree>& trees);

/// Lifts an L x L matrix to the 2L x 2L matrix of a dropout-duplicated batch
/// where sample i and i+L are copies: entry (i, j) = base(i mod L, j mod L).
SimilarityMatrix duplicate_for_augmentation(const SimilarityMatrix& base);

}  // namespace space3::semtree
