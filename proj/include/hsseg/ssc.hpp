#pragma once

#include <filesystem>

#include "hsseg/common.hpp"

namespace hsseg::ssc {

// Minimizes |y - D*c|_2^2 + lambda * |c|_1 by FISTA with adaptive restart.
// Note the squared-loss term carries no 1/2 factor.
Vector lasso_solve(const Vector& y, const Matrix& D, double lambda,
                   double tol = 1e-6, int max_iter = 2000);

// Self-expression matrix: column i solves the lasso with dictionary Z minus
// its own column, re-inserted with a structurally zero diagonal.  threads = 0
// uses the hardware concurrency; results are identical for any thread count.
Matrix build_code_matrix(const Matrix& Z, double lambda, double tol = 1e-6,
                         int max_iter = 2000, int threads = 0);

// |C| + |C|^T, symmetric and nonnegative.
Matrix affinity(const Matrix& C);

// Relative Frobenius change between successive code matrices.
double code_delta(const Matrix& c_new, const Matrix& c_old);

// Sparse export: one "i,j,value" line per entry with |value| > 1e-12.
void write_code_triplets(const Matrix& C, const std::filesystem::path& path);

}  // namespace hsseg::ssc
