#include "hsseg/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace hsseg::numerics {

Matrix pinv(const Matrix& M, double rcond) {
  check_finite(M, "pinv");
  if (rcond < 0.0) throw InvalidInput("pinv: rcond must be >= 0");
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = s.size() > 0 ? rcond * s(0) : 0.0;
  Vector sinv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut && s(i) > 0.0) sinv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

Matrix sylvester_solve(const Matrix& A, const Matrix& B, const Matrix& Q) {
  check_finite(A, "sylvester_solve A");
  check_finite(B, "sylvester_solve B");
  check_finite(Q, "sylvester_solve Q");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.rows();
  if (A.cols() != n || B.cols() != m || Q.rows() != n || Q.cols() != m) {
    throw InvalidInput("sylvester_solve: inconsistent shapes");
  }

  using CMatrix = Eigen::MatrixXcd;
  using CScalar = std::complex<double>;

  Eigen::ComplexSchur<Matrix> sa(A, true);
  Eigen::ComplexSchur<Matrix> sb(B, true);
  if (sa.info() != Eigen::Success || sb.info() != Eigen::Success) {
    throw NumericError("sylvester_solve: Schur decomposition failed");
  }
  const CMatrix& Ta = sa.matrixT();
  const CMatrix& Ua = sa.matrixU();
  const CMatrix& Tb = sb.matrixT();
  const CMatrix& Ub = sb.matrixU();

  CMatrix F = Ua.adjoint() * Q * Ub;
  const double tol = 1e-12 * std::max(1.0, A.norm() + B.norm());

  // Ta*Y + Y*Tb = F with both factors upper triangular: column k depends only
  // on columns < k, and each column is an upper-triangular solve with Ta
  // shifted by Tb(k,k).
  CMatrix Y(n, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::VectorXcd rhs = F.col(k);
    if (k > 0) rhs -= Y.leftCols(k) * Tb.col(k).head(k);
    const CScalar shift = Tb(k, k);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      const CScalar d = Ta(i, i) + shift;
      if (std::abs(d) <= tol) {
        throw SingularSylvester(
            "sylvester_solve: spectra of A and -B overlap within tolerance");
      }
      CScalar acc = rhs(i);
      for (Eigen::Index j = i + 1; j < n; ++j) acc -= Ta(i, j) * Y(j, k);
      Y(i, k) = acc / d;
    }
  }
  Matrix W = (Ua * Y * Ub.adjoint()).real();
  check_finite(W, "sylvester_solve result");
  return W;
}

EighResult eigh(const Matrix& S, int k, Which which) {
  check_finite(S, "eigh");
  const Eigen::Index n = S.rows();
  if (S.cols() != n) throw InvalidInput("eigh: matrix must be square");
  if (k < 1 || k > n) throw InvalidInput("eigh: k out of range");
  const double scale = std::max(S.norm(), 1e-300);
  if ((S - S.transpose()).norm() > 1e-6 * scale) {
    throw InvalidInput("eigh: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigh: eigensolver did not converge");
  }
  EighResult out;
  if (which == Which::smallest) {
    out.values = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
  } else {
    out.values = es.eigenvalues().tail(k);  // still ascending
    out.vectors = es.eigenvectors().rightCols(k);
  }
  return out;
}

namespace {

struct LloydResult {
  std::vector<int> labels;
  double wcss;
};

LloydResult lloyd_once(const Matrix& points, int k, Rng& rng, int max_iter) {
  const Eigen::Index n = points.rows();
  Matrix centers(k, points.cols());

  // kmeans++: first center uniform, then squared-distance weighting.
  centers.row(0) = points.row(static_cast<Eigen::Index>(
      rng.uniform_int(static_cast<std::uint64_t>(n))));
  Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(
          rng.uniform_int(static_cast<std::uint64_t>(n)));
    } else {
      const double t = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2(i);
        if (cum > t) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = points.row(pick);
    d2 = d2.cwiseMin(
        (points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> prev(labels);
  for (int it = 0; it < max_iter; ++it) {
    // Assignment; ties resolve to the lowest center index.
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      labels[static_cast<std::size_t>(i)] = best;
    }
    if (labels == prev) break;
    prev = labels;
    // Update; an empty cluster keeps its previous center.
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++cnt[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (cnt[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / cnt[static_cast<std::size_t>(c)];
      }
    }
  }

  double wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    wcss +=
        (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)]))
            .squaredNorm();
  }
  return {std::move(labels), wcss};
}

}  // namespace

std::vector<int> kmeans(const Matrix& points, int clusters, std::uint64_t seed,
                        int restarts, int max_iter) {
  check_finite(points, "kmeans");
  const Eigen::Index n = points.rows();
  if (clusters < 1) throw InvalidInput("kmeans: clusters must be >= 1");
  if (clusters > n) throw InvalidInput("kmeans: more clusters than points");
  if (restarts < 1) throw InvalidInput("kmeans: restarts must be >= 1");
  if (max_iter < 1) throw InvalidInput("kmeans: max_iter must be >= 1");

  std::vector<int> best;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(r));
    LloydResult run = lloyd_once(points, clusters, rng, max_iter);
    if (run.wcss < best_wcss) {  // strict: ties keep the lowest restart index
      best_wcss = run.wcss;
      best = std::move(run.labels);
    }
  }
  return best;
}

}  // namespace hsseg::numerics
