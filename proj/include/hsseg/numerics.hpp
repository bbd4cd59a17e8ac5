#pragma once

#include <cstdint>
#include <vector>

#include "hsseg/common.hpp"

namespace hsseg::numerics {

/// Moore-Penrose pseudoinverse via SVD. Singular values <= rcond * sigma_max
/// are treated as zero.
Matrix pinv(const Matrix& M, double rcond = 1e-12);

/// Solves A*W + W*B = Q for W (A n x n, B m x m, Q n x m) by complex Schur
/// reduction of both sides and triangular back-substitution. Requires the
/// spectra of A and -B to be disjoint; near-overlap raises SingularSylvester.
Matrix sylvester_solve(const Matrix& A, const Matrix& B, const Matrix& Q);

enum class Which { smallest, largest };

struct EighResult {
  Vector values;   // k eigenvalues, ascending
  Matrix vectors;  // n x k, columns matching values
};

/// Symmetric eigendecomposition of S (symmetrized as (S+S^T)/2 first).
/// Asymmetry beyond 1e-6 relative Frobenius is rejected.
EighResult eigh(const Matrix& S, int k, Which which);

/// Seeded k-means over rows of `points` with kmeans++ initialization.
/// Runs `restarts` independent starts and returns the labeling with minimum
/// within-cluster sum of squares (ties: lowest restart index). Deterministic
/// for a fixed seed.
std::vector<int> kmeans(const Matrix& points, int clusters, std::uint64_t seed,
                        int restarts = 10, int max_iter = 300);

}  // namespace hsseg::numerics
