#pragma once

#include <vector>

#include "hsseg/common.hpp"

namespace hsseg::ncuts {

struct ClusterAssignment {
  std::vector<int> labels;  // 0-based cluster ids
  int k = 0;
  Matrix embedding;  // row-normalized spectral embedding, one row per point
  bool degenerate = false;  // some cluster came back empty
};

// Spectral clustering on a symmetric nonnegative affinity: k smallest
// eigenvectors of the normalized Laplacian, rows normalized, then k-means
// with 10 seeded restarts.  Isolated vertices get unit degree so the
// Laplacian stays finite.
ClusterAssignment normalized_cuts(const Matrix& A, int k, std::uint64_t seed);

}  // namespace hsseg::ncuts
