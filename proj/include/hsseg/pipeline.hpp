#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hsseg/common.hpp"
#include "hsseg/ddl.hpp"
#include "hsseg/metrics.hpp"
#include "hsseg/ncuts.hpp"

namespace hsseg::pipeline {

enum class Mode { joint, piecemeal };

struct PipelineConfig {
  int window = 3;
  double pca_fraction = 0.10;
  int depth = 3;
  double mu = 1.0;
  double lambda = 1.0;
  int max_outer_iters = 100;
  double stop_tol = 1e-4;
  Mode mode = Mode::joint;
  ddl::ZMode z_mode = ddl::ZMode::paper_exact;
  bool nonneg_project = false;
  std::uint64_t seed = 0;
  int k_clusters = 0;
  bool normalize_features = true;
  bool normalize_codes = false;
  double lasso_tol = 1e-6;
  int lasso_max_iter = 2000;
  int threads = 0;
  bool include_unlabeled = false;
};

struct TraceRow {
  int iter = 0;
  double recon = 0.0;
  double ssc = 0.0;
  double l1 = 0.0;
  double total = 0.0;
  double delta_c = 0.0;
};

struct RunResult {
  ncuts::ClusterAssignment assignment;
  std::optional<metrics::MetricReport> report;
  std::vector<TraceRow> trace;
  bool converged = false;
  int iterations = 0;
  double wall_time_s = 0.0;
};

// Validates structural constraints shared by both modes; throws InvalidInput.
void validate(const PipelineConfig& cfg, Eigen::Index m);

// Alternating dictionary/coefficient/code updates on the feature columns of
// X, then spectral clustering of the final code affinity.  `truth` (1-based,
// 0 = unlabeled), when given, adds a metric report.
RunResult run_joint(const Matrix& X, const PipelineConfig& cfg,
                    const std::vector<int>* truth = nullptr);

// Stagewise control: dictionary learning to convergence with no
// self-expression coupling, then one code-matrix build on the final
// coefficients, then spectral clustering.
RunResult run_piecemeal(const Matrix& X, const PipelineConfig& cfg,
                        const std::vector<int>* truth = nullptr);

void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::filesystem::path& path);

// Entry point behind the command-line binary.  Returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace hsseg::pipeline
