#include "hsseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace hsseg::metrics {

namespace {

struct Contingency {
  std::vector<int> pred_vals;   // sorted distinct predicted values
  std::vector<int> true_vals;   // sorted distinct truth values (nonzero)
  std::vector<std::vector<double>> counts;  // [pred][truth]
  double n = 0.0;
};

Contingency contingency(const std::vector<int>& pred,
                        const std::vector<int>& truth) {
  if (pred.size() != truth.size()) {
    throw InvalidInput("metrics: pred/truth length mismatch");
  }
  std::set<int> pv, tv;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    pv.insert(pred[i]);
    tv.insert(truth[i]);
  }
  Contingency ct;
  ct.pred_vals.assign(pv.begin(), pv.end());
  ct.true_vals.assign(tv.begin(), tv.end());
  if (ct.true_vals.empty()) {
    throw InvalidInput("metrics: no labeled samples");
  }
  ct.counts.assign(ct.pred_vals.size(),
                   std::vector<double>(ct.true_vals.size(), 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    const auto pi = static_cast<std::size_t>(
        std::lower_bound(ct.pred_vals.begin(), ct.pred_vals.end(), pred[i]) -
        ct.pred_vals.begin());
    const auto ti = static_cast<std::size_t>(
        std::lower_bound(ct.true_vals.begin(), ct.true_vals.end(), truth[i]) -
        ct.true_vals.begin());
    ct.counts[pi][ti] += 1.0;
    ct.n += 1.0;
  }
  return ct;
}

// Partitions are identical iff every row and every column of the contingency
// table has exactly one nonzero cell.
bool identical_partitions(const Contingency& ct) {
  for (const auto& row : ct.counts) {
    int nz = 0;
    for (double v : row) nz += v > 0.0;
    if (nz != 1) return false;
  }
  for (std::size_t j = 0; j < ct.true_vals.size(); ++j) {
    int nz = 0;
    for (const auto& row : ct.counts) nz += row[j] > 0.0;
    if (nz != 1) return false;
  }
  return true;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
// potentials).  Returns assignment[row] = column.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, INF);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = INF;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)]
                               [static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] =
        j - 1;
  }
  return assignment;
}

}  // namespace

double nmi(const std::vector<int>& pred, const std::vector<int>& truth,
           NmiNorm norm) {
  const auto ct = contingency(pred, truth);
  const std::size_t R = ct.pred_vals.size(), T = ct.true_vals.size();
  std::vector<double> rp(R, 0.0), tp(T, 0.0);
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < T; ++j) rp[i] += ct.counts[i][j];
  }
  for (std::size_t j = 0; j < T; ++j) {
    for (std::size_t i = 0; i < R; ++i) tp[j] += ct.counts[i][j];
  }
  double hp = 0.0, ht = 0.0, mi = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    const double q = rp[i] / ct.n;
    if (q > 0.0) hp -= q * std::log(q);
  }
  for (std::size_t j = 0; j < T; ++j) {
    const double q = tp[j] / ct.n;
    if (q > 0.0) ht -= q * std::log(q);
  }
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < T; ++j) {
      const double nij = ct.counts[i][j];
      if (nij > 0.0) {
        mi += (nij / ct.n) * std::log(nij * ct.n / (rp[i] * tp[j]));
      }
    }
  }
  if (hp > 0.0 && ht > 0.0) {
    const double denom =
        norm == NmiNorm::geometric ? std::sqrt(hp * ht) : (hp + ht) / 2.0;
    return std::clamp(mi / denom, 0.0, 1.0);
  }
  // At least one side has a single cluster: entropy vanishes, so normalize by
  // convention.
  return identical_partitions(ct) ? 1.0 : 0.0;
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto ct = contingency(pred, truth);
  const std::size_t R = ct.pred_vals.size(), T = ct.true_vals.size();
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
      sum_ij += comb2(ct.counts[i][j]);
      a += ct.counts[i][j];
    }
    sum_a += comb2(a);
  }
  for (std::size_t j = 0; j < T; ++j) {
    double b = 0.0;
    for (std::size_t i = 0; i < R; ++i) b += ct.counts[i][j];
    sum_b += comb2(b);
  }
  const double c2n = comb2(ct.n);
  if (c2n <= 0.0) return identical_partitions(ct) ? 1.0 : 0.0;
  const double expected = sum_a * sum_b / c2n;
  const double denom = 0.5 * (sum_a + sum_b) - expected;
  if (std::abs(denom) <= 1e-12) return identical_partitions(ct) ? 1.0 : 0.0;
  return (sum_ij - expected) / denom;
}

std::pair<double, double> purity_entropy(const std::vector<int>& pred,
                                         const std::vector<int>& truth) {
  const auto ct = contingency(pred, truth);
  const std::size_t R = ct.pred_vals.size(), T = ct.true_vals.size();
  double purity = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    purity += *std::max_element(ct.counts[i].begin(), ct.counts[i].end());
  }
  purity /= ct.n;

  if (T == 1) return {purity, 0.0};
  double ent = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    double ni = 0.0;
    for (std::size_t j = 0; j < T; ++j) ni += ct.counts[i][j];
    if (ni <= 0.0) continue;
    for (std::size_t j = 0; j < T; ++j) {
      const double nij = ct.counts[i][j];
      if (nij > 0.0) ent -= (nij / ct.n) * std::log2(nij / ni);
    }
  }
  return {purity, ent / std::log2(static_cast<double>(T))};
}

std::map<int, int> best_map(const std::vector<int>& pred,
                            const std::vector<int>& truth) {
  const auto ct = contingency(pred, truth);
  const std::size_t R = ct.pred_vals.size(), T = ct.true_vals.size();
  const std::size_t N = std::max(R, T);
  std::vector<std::vector<double>> cost(N, std::vector<double>(N, 0.0));
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < T; ++j) cost[i][j] = -ct.counts[i][j];
  }
  const auto assignment = hungarian(cost);
  std::map<int, int> mapping;
  for (std::size_t i = 0; i < R; ++i) {
    const auto j = static_cast<std::size_t>(assignment[i]);
    mapping[ct.pred_vals[i]] = j < T ? ct.true_vals[j] : -1;
  }
  return mapping;
}

std::tuple<double, double, double> oa_aa_kappa(
    const std::vector<int>& pred, const std::vector<int>& truth,
    const std::map<int, int>& mapping) {
  const auto ct = contingency(pred, truth);
  const std::size_t T = ct.true_vals.size();

  std::vector<int> mapped;
  mapped.reserve(pred.size());
  std::vector<int> kept_truth;
  kept_truth.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    const auto it = mapping.find(pred[i]);
    mapped.push_back(it == mapping.end() ? -1 : it->second);
    kept_truth.push_back(truth[i]);
  }
  const double n = static_cast<double>(kept_truth.size());

  double correct = 0.0;
  std::vector<double> class_total(T, 0.0), class_hit(T, 0.0), row_count(T, 0.0);
  for (std::size_t i = 0; i < kept_truth.size(); ++i) {
    const auto ti = static_cast<std::size_t>(
        std::lower_bound(ct.true_vals.begin(), ct.true_vals.end(),
                         kept_truth[i]) -
        ct.true_vals.begin());
    class_total[ti] += 1.0;
    if (mapped[i] == kept_truth[i]) {
      correct += 1.0;
      class_hit[ti] += 1.0;
    }
    // Marginal of mapped predictions over truth values, for chance agreement.
    const auto rt = std::lower_bound(ct.true_vals.begin(), ct.true_vals.end(),
                                     mapped[i]);
    if (rt != ct.true_vals.end() && *rt == mapped[i]) {
      row_count[static_cast<std::size_t>(rt - ct.true_vals.begin())] += 1.0;
    }
  }
  const double oa = correct / n;
  double aa = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    aa += class_total[j] > 0.0 ? class_hit[j] / class_total[j] : 0.0;
  }
  aa /= static_cast<double>(T);

  double pe = 0.0;
  for (std::size_t j = 0; j < T; ++j) pe += row_count[j] * class_total[j];
  pe /= n * n;
  const double kappa = std::abs(1.0 - pe) < 1e-15 ? 1.0 : (oa - pe) / (1.0 - pe);
  return {oa, aa, kappa};
}

MetricReport evaluate(const std::vector<int>& pred,
                      const std::vector<int>& truth, NmiNorm norm) {
  MetricReport r;
  r.nmi = nmi(pred, truth, norm);
  r.ari = ari(pred, truth);
  std::tie(r.purity, r.entropy) = purity_entropy(pred, truth);
  r.mapping = best_map(pred, truth);
  std::tie(r.oa, r.aa, r.kappa) = oa_aa_kappa(pred, truth, r.mapping);
  return r;
}

std::string to_json(const MetricReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "{\n";
  os << "  \"nmi\": " << report.nmi << ",\n";
  os << "  \"ari\": " << report.ari << ",\n";
  os << "  \"purity\": " << report.purity << ",\n";
  os << "  \"entropy\": " << report.entropy << ",\n";
  os << "  \"oa\": " << report.oa << ",\n";
  os << "  \"aa\": " << report.aa << ",\n";
  os << "  \"kappa\": " << report.kappa << ",\n";
  os << "  \"mapping\": {";
  bool first = true;
  for (const auto& [p, t] : report.mapping) {
    if (!first) os << ", ";
    first = false;
    os << "\"" << p << "\": " << t;
  }
  os << "}\n}";
  return os.str();
}

}  // namespace hsseg::metrics
