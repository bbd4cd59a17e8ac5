#include "hsseg/ssc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <thread>
#include <vector>

namespace hsseg::ssc {

namespace {

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Largest squared singular value of D by power iteration on D^T D, with a
// small safety factor.  Falls back to the Frobenius bound if the iteration
// collapses.
double lipschitz(const Matrix& D) {
  const Eigen::Index p = D.cols();
  Vector v = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lip = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = D.transpose() * (D * v);
    const double n = w.norm();
    if (n <= 1e-300) return std::max(D.squaredNorm(), 1e-300);
    lip = n;
    v = w / n;
  }
  return lip;
}

}  // namespace

Vector lasso_solve(const Vector& y, const Matrix& D, double lambda,
                   double tol, int max_iter) {
  if (D.rows() != y.size()) throw InvalidInput("lasso: dimension mismatch");
  if (D.cols() < 1) throw InvalidInput("lasso: empty dictionary");
  if (lambda <= 0.0) throw InvalidInput("lasso: lambda must be > 0");
  if (tol <= 0.0) throw InvalidInput("lasso: tol must be > 0");
  if (max_iter < 1) throw InvalidInput("lasso: max_iter must be >= 1");
  check_finite(D, "lasso dictionary");
  check_finite(y, "lasso target");

  const Eigen::Index p = D.cols();
  if (D.norm() == 0.0) return Vector::Zero(p);

  const double lip = lipschitz(D) * 1.01;
  const double thresh = lambda / (2.0 * lip);

  // Convergence requires both an objective plateau and the subgradient
  // optimality certificate at the candidate point.
  auto certified = [&](const Vector& cand, const Vector& resid) {
    const Vector g = 2.0 * D.transpose() * resid;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (cand(j) != 0.0) {
        const double sign = cand(j) > 0.0 ? 1.0 : -1.0;
        if (std::abs(g(j) - lambda * sign) > 10.0 * tol * lambda) return false;
      } else if (std::abs(g(j)) > lambda * (1.0 + 10.0 * tol)) {
        return false;
      }
    }
    return true;
  };

  Vector c = Vector::Zero(p);
  Vector v = c;
  double t = 1.0;
  double f_prev = y.squaredNorm();  // objective at c = 0

  Vector cn(p);
  for (int it = 0; it < max_iter; ++it) {
    const Vector grad = D.transpose() * (D * v - y);
    cn = v - grad / lip;
    for (Eigen::Index j = 0; j < p; ++j) cn(j) = soft(cn(j), thresh);

    const Vector resid = y - D * cn;
    const double f_new = resid.squaredNorm() + lambda * cn.cwiseAbs().sum();
    if (f_new > f_prev) {
      // Restart the momentum sequence from the new point.
      t = 1.0;
      v = cn;
      c = cn;
      f_prev = f_new;
      continue;
    }
    const double tn = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    v = cn + ((t - 1.0) / tn) * (cn - c);
    t = tn;
    const bool plateau = (f_prev - f_new) < tol * std::max(f_prev, 1e-12);
    c = cn;
    f_prev = f_new;
    if (plateau && certified(c, resid)) break;
  }
  return c;
}

Matrix build_code_matrix(const Matrix& Z, double lambda, double tol,
                         int max_iter, int threads) {
  const Eigen::Index m = Z.cols();
  if (m < 2) throw InvalidInput("build_code_matrix: need at least 2 columns");
  if (threads < 0) throw InvalidInput("build_code_matrix: threads must be >= 0");

  int T = threads > 0 ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  T = std::clamp(T, 1, static_cast<int>(m));

  Matrix C = Matrix::Zero(m, m);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(T));

  auto work = [&](int tid) {
    try {
      const Eigen::Index lo = m * tid / T;
      const Eigen::Index hi = m * (tid + 1) / T;
      Matrix Di(Z.rows(), m - 1);
      for (Eigen::Index i = lo; i < hi; ++i) {
        Di.leftCols(i) = Z.leftCols(i);
        Di.rightCols(m - 1 - i) = Z.rightCols(m - 1 - i);
        const Vector ci = lasso_solve(Z.col(i), Di, lambda, tol, max_iter);
        // Columns written here are disjoint across threads.
        C.block(0, i, i, 1) = ci.head(i);
        C.block(i + 1, i, m - 1 - i, 1) = ci.tail(m - 1 - i);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(tid)] = std::current_exception();
    }
  };

  if (T == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(T));
    for (int tid = 0; tid < T; ++tid) pool.emplace_back(work, tid);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return C;
}

Matrix affinity(const Matrix& C) {
  if (C.rows() != C.cols()) throw InvalidInput("affinity: C must be square");
  const Matrix A = C.cwiseAbs();
  return A + A.transpose();
}

double code_delta(const Matrix& c_new, const Matrix& c_old) {
  if (c_new.rows() != c_old.rows() || c_new.cols() != c_old.cols()) {
    throw InvalidInput("code_delta: shape mismatch");
  }
  return (c_new - c_old).norm() / std::max(c_old.norm(), 1e-12);
}

void write_code_triplets(const Matrix& C, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write triplets: " + path.string());
  out << std::setprecision(17);
  out << "i,j,value\n";
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
      if (std::abs(C(i, j)) > 1e-12) {
        out << i << "," << j << "," << C(i, j) << "\n";
      }
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hsseg::ssc
