#include "hsseg/ncuts.hpp"

#include <algorithm>
#include <cmath>

#include "hsseg/numerics.hpp"

namespace hsseg::ncuts {

ClusterAssignment normalized_cuts(const Matrix& A, int k, std::uint64_t seed) {
  const Eigen::Index m = A.rows();
  if (A.cols() != m) throw InvalidInput("ncuts: affinity must be square");
  if (k < 2) throw InvalidInput("ncuts: k must be >= 2");
  if (k > m) throw InvalidInput("ncuts: k exceeds point count");
  check_finite(A, "ncuts affinity");

  const double max_abs = A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, max_abs)) {
    throw InvalidInput("ncuts: affinity must be symmetric");
  }
  if (A.minCoeff() < 0.0) {
    throw InvalidInput("ncuts: affinity must be nonnegative");
  }

  Vector deg = A.rowwise().sum();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (deg(i) <= 0.0) deg(i) = 1.0;  // isolated vertex
  }
  const Vector dinv = deg.cwiseSqrt().cwiseInverse();
  const Matrix L = Matrix::Identity(m, m) -
                   dinv.asDiagonal() * A * dinv.asDiagonal();

  const auto eig = numerics::eigh(L, k, numerics::Which::smallest);
  Matrix emb = eig.vectors;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = emb.row(i).norm();
    if (n > 0.0) emb.row(i) /= n;
  }

  ClusterAssignment out;
  out.labels = numerics::kmeans(emb, k, seed);
  out.k = k;
  out.embedding = std::move(emb);

  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : out.labels) counts[static_cast<std::size_t>(l)]++;
  out.degenerate =
      std::any_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
  return out;
}

}  // namespace hsseg::ncuts
