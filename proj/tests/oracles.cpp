#include "oracles.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace hsseg::oracles {

namespace {

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

struct Table {
  std::vector<int> pred_vals, true_vals;
  std::vector<std::vector<double>> counts;
  double n = 0.0;
};

Table table_of(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::set<int> pv, tv;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    pv.insert(pred[i]);
    tv.insert(truth[i]);
  }
  Table t;
  t.pred_vals.assign(pv.begin(), pv.end());
  t.true_vals.assign(tv.begin(), tv.end());
  t.counts.assign(t.pred_vals.size(),
                  std::vector<double>(t.true_vals.size(), 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    const auto pi = static_cast<std::size_t>(
        std::find(t.pred_vals.begin(), t.pred_vals.end(), pred[i]) -
        t.pred_vals.begin());
    const auto ti = static_cast<std::size_t>(
        std::find(t.true_vals.begin(), t.true_vals.end(), truth[i]) -
        t.true_vals.begin());
    t.counts[pi][ti] += 1.0;
    t.n += 1.0;
  }
  return t;
}

// Same labeled pairs grouped together in both labelings.
bool co_membership_identical(const std::vector<int>& pred,
                             const std::vector<int>& truth) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 0) keep.push_back(i);
  }
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = a + 1; b < keep.size(); ++b) {
      const bool same_p = pred[keep[a]] == pred[keep[b]];
      const bool same_t = truth[keep[a]] == truth[keep[b]];
      if (same_p != same_t) return false;
    }
  }
  return true;
}

}  // namespace

Vector cd_lasso(const Vector& y, const Matrix& D, double lambda,
                double obj_tol, int max_sweeps) {
  const Eigen::Index p = D.cols();
  Vector c = Vector::Zero(p);
  Vector colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) colsq(j) = D.col(j).squaredNorm();
  Vector r = y;  // residual y - D*c, maintained incrementally
  double f_prev = lasso_objective(y, D, c, lambda);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (colsq(j) == 0.0) continue;
      const double rho = D.col(j).dot(r) + colsq(j) * c(j);
      const double cj = soft(rho, lambda / 2.0) / colsq(j);
      if (cj != c(j)) {
        r -= D.col(j) * (cj - c(j));
        c(j) = cj;
      }
    }
    const double f = lasso_objective(y, D, c, lambda);
    if (sweep >= 3 && std::abs(f_prev - f) < obj_tol * std::max(1.0, f_prev)) {
      break;
    }
    f_prev = f;
  }
  return c;
}

double lasso_objective(const Vector& y, const Matrix& D, const Vector& c,
                       double lambda) {
  return (y - D * c).squaredNorm() + lambda * c.cwiseAbs().sum();
}

Matrix kron_sylvester(const Matrix& A, const Matrix& B, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.rows();
  Matrix K = Matrix::Zero(n * m, n * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    K.block(i * n, i * n, n, n) += A;
    for (Eigen::Index j = 0; j < m; ++j) {
      K.block(i * n, j * n, n, n) +=
          B(j, i) * Matrix::Identity(n, n);
    }
  }
  Vector q(n * m);
  for (Eigen::Index c = 0; c < m; ++c) q.segment(c * n, n) = Q.col(c);
  const Vector x = Eigen::FullPivLU<Matrix>(K).solve(q);
  Matrix Z(n, m);
  for (Eigen::Index c = 0; c < m; ++c) Z.col(c) = x.segment(c * n, n);
  return Z;
}

std::vector<double> charpoly_eigs(const Matrix& S) {
  const Eigen::Index n = S.rows();
  // Faddeev-LeVerrier: p(x) = x^n + coef[n-1] x^{n-1} + ... + coef[0].
  std::vector<double> coef(static_cast<std::size_t>(n), 0.0);
  Matrix M = S;
  coef[static_cast<std::size_t>(n - 1)] = -M.trace();
  for (Eigen::Index k = 2; k <= n; ++k) {
    M = S * (M + coef[static_cast<std::size_t>(n - k + 1)] *
                     Matrix::Identity(n, n));
    coef[static_cast<std::size_t>(n - k)] =
        -M.trace() / static_cast<double>(k);
  }
  auto eval = [&](double x) {
    double v = 1.0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      v = v * x + coef[static_cast<std::size_t>(i)];
    }
    return v;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double radius = S.row(i).cwiseAbs().sum() - std::abs(S(i, i));
    lo = std::min(lo, S(i, i) - radius);
    hi = std::max(hi, S(i, i) + radius);
  }
  lo -= 1.0;
  hi += 1.0;

  std::vector<double> roots;
  const int grid = 200000;
  double x_prev = lo;
  double f_prev = eval(lo);
  for (int g = 1; g <= grid; ++g) {
    const double x = lo + (hi - lo) * g / grid;
    const double f = eval(x);
    if (f_prev == 0.0) {
      roots.push_back(x_prev);
    } else if ((f_prev < 0.0) != (f < 0.0)) {
      double a = x_prev, b = x, fa = f_prev;
      for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
        const double mid = (a + b) / 2.0;
        const double fm = eval(mid);
        if (fm == 0.0) {
          a = b = mid;
        } else if ((fa < 0.0) != (fm < 0.0)) {
          b = mid;
        } else {
          a = mid;
          fa = fm;
        }
      }
      roots.push_back((a + b) / 2.0);
    }
    x_prev = x;
    f_prev = f;
  }
  if (static_cast<Eigen::Index>(roots.size()) != n) {
    throw NumericError("charpoly_eigs: sign scan missed a root");
  }
  return roots;
}

double gd_dict_objective(const Matrix& X, const Matrix& P, const Matrix& Q,
                         const Matrix& D0) {
  Matrix D = D0;
  double f = (X - P * D * Q).squaredNorm();
  for (int it = 0; it < 500000; ++it) {
    const Matrix R = X - P * D * Q;
    const Matrix G = -2.0 * P.transpose() * R * Q.transpose();
    const double g2 = G.squaredNorm();
    if (g2 <= 1e-22 * std::max(1.0, f)) break;
    const double denom = (P * G * Q).squaredNorm();
    if (denom <= 0.0) break;
    D -= (0.5 * g2 / denom) * G;
    const double f_new = (X - P * D * Q).squaredNorm();
    if (std::abs(f - f_new) < 1e-15 * std::max(1.0, f)) {
      f = f_new;
      break;
    }
    f = f_new;
  }
  return f;
}

double gd_z_objective(const Matrix& X, const Matrix& Dbar, const Matrix& C,
                      double mu, const Matrix& Z0) {
  const Matrix IC = Matrix::Identity(C.rows(), C.cols()) - C;
  Matrix Z = Z0;
  auto obj = [&](const Matrix& W) {
    return (X - Dbar * W).squaredNorm() + mu * (W * IC).squaredNorm();
  };
  double f = obj(Z);
  for (int it = 0; it < 500000; ++it) {
    const Matrix R = X - Dbar * Z;
    const Matrix G =
        -2.0 * Dbar.transpose() * R + 2.0 * mu * (Z * IC) * IC.transpose();
    const double g2 = G.squaredNorm();
    if (g2 <= 1e-22 * std::max(1.0, f)) break;
    const double denom =
        (Dbar * G).squaredNorm() + mu * (G * IC).squaredNorm();
    if (denom <= 0.0) break;
    Z -= (0.5 * g2 / denom) * G;
    const double f_new = obj(Z);
    if (std::abs(f - f_new) < 1e-15 * std::max(1.0, f)) {
      f = f_new;
      break;
    }
    f = f_new;
  }
  return f;
}

std::pair<std::vector<int>, double> exhaustive_min_ncut(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  double best = std::numeric_limits<double>::infinity();
  unsigned best_mask = 1;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    double cut = 0.0, assoc_s = 0.0, assoc_t = 0.0;
    for (int i = 0; i < n; ++i) {
      const bool in_s = (mask >> i) & 1u;
      for (int j = 0; j < n; ++j) {
        const bool j_in_s = (mask >> j) & 1u;
        if (in_s) {
          assoc_s += A(i, j);
        } else {
          assoc_t += A(i, j);
        }
        if (in_s && !j_in_s) cut += A(i, j);
      }
    }
    if (assoc_s <= 0.0 || assoc_t <= 0.0) continue;
    const double ncut = cut / assoc_s + cut / assoc_t;
    if (ncut < best) {
      best = ncut;
      best_mask = mask;
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] =
        static_cast<int>((best_mask >> i) & 1u);
  }
  return {labels, best};
}

double exhaustive_kmeans_wcss(const Matrix& points, int k) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(k);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (int i = 0; i < n; ++i) {
      assign[static_cast<std::size_t>(i)] = static_cast<int>(c % k);
      c /= static_cast<std::size_t>(k);
    }
    double wcss = 0.0;
    for (int g = 0; g < k; ++g) {
      Vector centroid = Vector::Zero(d);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (assign[static_cast<std::size_t>(i)] == g) {
          centroid += points.row(i).transpose();
          ++count;
        }
      }
      if (count == 0) continue;
      centroid /= static_cast<double>(count);
      for (int i = 0; i < n; ++i) {
        if (assign[static_cast<std::size_t>(i)] == g) {
          wcss += (points.row(i).transpose() - centroid).squaredNorm();
        }
      }
    }
    best = std::min(best, wcss);
  }
  return best;
}

double nmi_direct(const std::vector<int>& pred, const std::vector<int>& truth,
                  bool arithmetic) {
  const Table t = table_of(pred, truth);
  const std::size_t R = t.pred_vals.size(), T = t.true_vals.size();
  std::vector<double> rp(R, 0.0), tp(T, 0.0);
  double mi = 0.0, hp = 0.0, ht = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < T; ++j) rp[i] += t.counts[i][j];
  }
  for (std::size_t j = 0; j < T; ++j) {
    for (std::size_t i = 0; i < R; ++i) tp[j] += t.counts[i][j];
  }
  for (std::size_t i = 0; i < R; ++i) {
    if (rp[i] > 0.0) hp -= (rp[i] / t.n) * std::log(rp[i] / t.n);
  }
  for (std::size_t j = 0; j < T; ++j) {
    if (tp[j] > 0.0) ht -= (tp[j] / t.n) * std::log(tp[j] / t.n);
  }
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < T; ++j) {
      if (t.counts[i][j] > 0.0) {
        mi += (t.counts[i][j] / t.n) *
              std::log(t.counts[i][j] * t.n / (rp[i] * tp[j]));
      }
    }
  }
  if (hp > 0.0 && ht > 0.0) {
    const double denom = arithmetic ? (hp + ht) / 2.0 : std::sqrt(hp * ht);
    return std::clamp(mi / denom, 0.0, 1.0);
  }
  return co_membership_identical(pred, truth) ? 1.0 : 0.0;
}

double ari_pairs(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 0) keep.push_back(i);
  }
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  for (std::size_t x = 0; x < keep.size(); ++x) {
    for (std::size_t y = x + 1; y < keep.size(); ++y) {
      const bool same_p = pred[keep[x]] == pred[keep[y]];
      const bool same_t = truth[keep[x]] == truth[keep[y]];
      if (same_p && same_t) {
        a += 1.0;
      } else if (same_p) {
        b += 1.0;
      } else if (same_t) {
        c += 1.0;
      } else {
        d += 1.0;
      }
    }
  }
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom <= 1e-12) {
    return co_membership_identical(pred, truth) ? 1.0 : 0.0;
  }
  return 2.0 * (a * d - b * c) / denom;
}

double purity_direct(const std::vector<int>& pred,
                     const std::vector<int>& truth) {
  const Table t = table_of(pred, truth);
  double purity = 0.0;
  for (const auto& row : t.counts) {
    purity += *std::max_element(row.begin(), row.end());
  }
  return purity / t.n;
}

double entropy_direct(const std::vector<int>& pred,
                      const std::vector<int>& truth) {
  const Table t = table_of(pred, truth);
  if (t.true_vals.size() == 1) return 0.0;
  double ent = 0.0;
  for (const auto& row : t.counts) {
    const double ni = std::accumulate(row.begin(), row.end(), 0.0);
    if (ni <= 0.0) continue;
    for (double nij : row) {
      if (nij > 0.0) ent -= (nij / t.n) * std::log2(nij / ni);
    }
  }
  return ent / std::log2(static_cast<double>(t.true_vals.size()));
}

double bestmap_weight_exhaustive(const std::vector<int>& pred,
                                 const std::vector<int>& truth) {
  const Table t = table_of(pred, truth);
  const std::size_t R = t.pred_vals.size(), T = t.true_vals.size();
  const std::size_t N = std::max(R, T);
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double w = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
      const auto j = static_cast<std::size_t>(perm[i]);
      if (j < T) w += t.counts[i][j];
    }
    best = std::max(best, w);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double mapping_weight(const std::vector<int>& pred,
                      const std::vector<int>& truth,
                      const std::map<int, int>& mapping) {
  double w = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    const auto it = mapping.find(pred[i]);
    if (it != mapping.end() && it->second == truth[i]) w += 1.0;
  }
  return w;
}

}  // namespace hsseg::oracles
