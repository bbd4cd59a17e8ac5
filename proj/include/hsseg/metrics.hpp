#pragma once

#include <map>
#include <string>
#include <vector>

#include "hsseg/common.hpp"

namespace hsseg::metrics {

// Truth label 0 means "unlabeled" and is excluded from every metric.

enum class NmiNorm { geometric, arithmetic };

struct MetricReport {
  double nmi = 0.0;
  double ari = 0.0;
  double purity = 0.0;
  double entropy = 0.0;
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  std::map<int, int> mapping;  // predicted value -> truth value, -1 unmatched
};

double nmi(const std::vector<int>& pred, const std::vector<int>& truth,
           NmiNorm norm = NmiNorm::geometric);
double ari(const std::vector<int>& pred, const std::vector<int>& truth);
// Returns {purity, entropy}; entropy is normalized by log2 of the truth
// cluster count, and defined as 0 when there is a single truth cluster.
std::pair<double, double> purity_entropy(const std::vector<int>& pred,
                                         const std::vector<int>& truth);
// Maximum-weight one-to-one assignment of predicted values to truth values.
// Predicted values left unmatched map to -1.
std::map<int, int> best_map(const std::vector<int>& pred,
                            const std::vector<int>& truth);
// Overall accuracy, average per-class accuracy, and Cohen's kappa after
// applying `mapping` to the predictions.
std::tuple<double, double, double> oa_aa_kappa(
    const std::vector<int>& pred, const std::vector<int>& truth,
    const std::map<int, int>& mapping);

MetricReport evaluate(const std::vector<int>& pred,
                      const std::vector<int>& truth,
                      NmiNorm norm = NmiNorm::geometric);

std::string to_json(const MetricReport& report);

}  // namespace hsseg::metrics
