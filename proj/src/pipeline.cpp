#include "hsseg/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "hsseg/features.hpp"
#include "hsseg/numerics.hpp"
#include "hsseg/ssc.hpp"

namespace hsseg::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Re-throws a module error with an "iteration N:" prefix so failures inside
// the alternating loop are attributable.
template <typename F>
auto at_iteration(int it, F&& f) {
  auto prefix = [it](const char* what) {
    std::ostringstream os;
    os << "iteration " << it << ": " << what;
    return os.str();
  };
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw InvalidInput(prefix(e.what()));
  } catch (const FormatError& e) {
    throw FormatError(prefix(e.what()));
  } catch (const IoError& e) {
    throw IoError(prefix(e.what()));
  } catch (const SingularSylvester& e) {
    throw SingularSylvester(prefix(e.what()));
  } catch (const DegenerateData& e) {
    throw DegenerateData(prefix(e.what()));
  } catch (const NumericError& e) {
    throw NumericError(prefix(e.what()));
  }
}

void finish_with_clustering(const Matrix& C, const PipelineConfig& cfg,
                            const std::vector<int>* truth, RunResult& out) {
  const Matrix A = ssc::affinity(C);
  out.assignment = ncuts::normalized_cuts(A, cfg.k_clusters, cfg.seed);
  if (truth) {
    out.report = metrics::evaluate(out.assignment.labels, *truth);
  }
}

}  // namespace

void validate(const PipelineConfig& cfg, Eigen::Index m) {
  if (cfg.k_clusters < 2) throw InvalidInput("k_clusters >= 2 required");
  if (m > 20000) {
    std::ostringstream os;
    os << "sample count " << m << " exceeds the 20000 limit: the dense " << m
       << "x" << m << " code matrix and the cubic-cost coefficient solve "
       << "do not fit this implementation";
    throw InvalidInput(os.str());
  }
  if (cfg.depth < 1 || cfg.depth > 4) {
    throw InvalidInput("depth must be between 1 and 4");
  }
  if (!(cfg.lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  if (cfg.mu < 0.0) throw InvalidInput("mu must be >= 0");
  if (!(cfg.stop_tol > 0.0)) throw InvalidInput("stop_tol must be > 0");
  if (cfg.max_outer_iters < 1) {
    throw InvalidInput("max_outer_iters must be >= 1");
  }
  if (cfg.window < 1 || cfg.window % 2 == 0) {
    throw InvalidInput("window must be odd and >= 1");
  }
  if (!(cfg.pca_fraction > 0.0) || cfg.pca_fraction > 1.0) {
    throw InvalidInput("pca_fraction must be in (0, 1]");
  }
  if (cfg.threads < 0) throw InvalidInput("threads must be >= 0");
}

RunResult run_joint(const Matrix& X, const PipelineConfig& cfg,
                    const std::vector<int>* truth) {
  const auto t0 = Clock::now();
  validate(cfg, X.cols());
  check_finite(X, "pipeline input");

  const auto schedule =
      ddl::LayerSchedule::halving(static_cast<int>(X.rows()), cfg.depth);
  auto state = ddl::init_state(X, schedule, cfg.seed, cfg.mu);
  const int L = static_cast<int>(state.dictionaries.size());
  const Eigen::Index m = X.cols();
  Matrix C = Matrix::Zero(m, m);

  RunResult out;
  for (int it = 1; it <= cfg.max_outer_iters; ++it) {
    at_iteration(it, [&] {
      for (int l = 1; l <= L; ++l) {
        state = ddl::update_dictionary(state, X, l);
      }
      state = ddl::update_z(state, X, C, cfg.z_mode);
      if (cfg.nonneg_project) state.Z = state.Z.cwiseMax(0.0);

      Matrix Zc = state.Z;
      if (cfg.normalize_codes) features::normalize_columns(Zc);
      Matrix Cn = ssc::build_code_matrix(Zc, cfg.lambda, cfg.lasso_tol,
                                         cfg.lasso_max_iter, cfg.threads);
      const double delta = ssc::code_delta(Cn, C);
      C = std::move(Cn);

      const auto obj = ddl::objective(state, X, C, cfg.lambda);
      out.trace.push_back({it, obj.recon, obj.ssc, obj.l1, obj.total, delta});
      state.iteration = it;
      out.iterations = it;
      if (delta < cfg.stop_tol) out.converged = true;
      return 0;
    });
    if (out.converged) break;
  }

  finish_with_clustering(C, cfg, truth, out);
  out.wall_time_s = seconds_since(t0);
  return out;
}

RunResult run_piecemeal(const Matrix& X, const PipelineConfig& cfg,
                        const std::vector<int>* truth) {
  const auto t0 = Clock::now();
  validate(cfg, X.cols());
  check_finite(X, "pipeline input");

  const auto schedule =
      ddl::LayerSchedule::halving(static_cast<int>(X.rows()), cfg.depth);
  auto state = ddl::init_state(X, schedule, cfg.seed, 0.0);
  const int L = static_cast<int>(state.dictionaries.size());

  RunResult out;
  double recon_prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= cfg.max_outer_iters; ++it) {
    at_iteration(it, [&] {
      for (int l = 1; l <= L; ++l) {
        state = ddl::update_dictionary(state, X, l);
      }
      // No self-expression coupling in this phase, so the coefficient update
      // is plain least squares against the composed dictionary.
      state.Z = numerics::pinv(ddl::composed(state)) * X;
      if (cfg.nonneg_project) state.Z = state.Z.cwiseMax(0.0);
      check_finite(state.Z, "piecemeal Z");

      const double recon = (X - ddl::composed(state) * state.Z).squaredNorm();
      const double delta_rel =
          std::isfinite(recon_prev)
              ? std::abs(recon_prev - recon) / std::max(recon_prev, 1e-12)
              : std::numeric_limits<double>::infinity();
      out.trace.push_back({it, recon, 0.0, 0.0, recon,
                           std::isfinite(delta_rel) ? delta_rel : 0.0});
      state.iteration = it;
      out.iterations = it;
      if (std::isfinite(recon_prev) && delta_rel < cfg.stop_tol) {
        out.converged = true;
      }
      recon_prev = recon;
      return 0;
    });
    if (out.converged) break;
  }

  Matrix Zc = state.Z;
  if (cfg.normalize_codes) features::normalize_columns(Zc);
  const Matrix C = ssc::build_code_matrix(Zc, cfg.lambda, cfg.lasso_tol,
                                          cfg.lasso_max_iter, cfg.threads);
  {
    const double recon = (X - ddl::composed(state) * state.Z).squaredNorm();
    const double ssc_term = (state.Z - state.Z * C).squaredNorm();
    const double l1 = C.cwiseAbs().sum();
    out.trace.push_back({out.iterations + 1, recon, ssc_term, l1,
                         recon + cfg.mu * ssc_term + cfg.lambda * l1, 0.0});
  }

  finish_with_clustering(C, cfg, truth, out);
  out.wall_time_s = seconds_since(t0);
  return out;
}

void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write trace CSV: " + path.string());
  out << std::setprecision(17);
  out << "iter,recon_term,ssc_term,l1_term,total,delta_C\n";
  for (const auto& row : trace) {
    out << row.iter << "," << row.recon << "," << row.ssc << "," << row.l1
        << "," << row.total << "," << row.delta_c << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hsseg::pipeline
