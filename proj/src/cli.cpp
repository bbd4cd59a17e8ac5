#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "hsseg/dataio.hpp"
#include "hsseg/features.hpp"
#include "hsseg/pipeline.hpp"

namespace hsseg::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct ClusterOpts {
  std::string features_path;
  std::string cube_path;
  std::string truth_path;
  std::string config_path;
  std::string out_dir;
  std::string mode_str = "joint";
  std::string z_mode_str = "paper-exact";
  PipelineConfig cfg;
};

std::string normalize_token(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

Mode parse_mode(const std::string& s) {
  const std::string t = normalize_token(s);
  if (t == "joint") return Mode::joint;
  if (t == "piecemeal") return Mode::piecemeal;
  throw InvalidInput("mode must be \"joint\" or \"piecemeal\", got \"" + s +
                     "\"");
}

ddl::ZMode parse_z_mode(const std::string& s) {
  const std::string t = normalize_token(s);
  if (t == "paper-exact") return ddl::ZMode::paper_exact;
  if (t == "gradient-exact") return ddl::ZMode::gradient_exact;
  throw InvalidInput(
      "z-mode must be \"paper-exact\" or \"gradient-exact\", got \"" + s +
      "\"");
}

metrics::NmiNorm parse_nmi_norm(const std::string& s) {
  if (s == "geometric") return metrics::NmiNorm::geometric;
  if (s == "arithmetic") return metrics::NmiNorm::arithmetic;
  throw InvalidInput("nmi-norm must be \"geometric\" or \"arithmetic\"");
}

// Configuration file keys mirror the cluster flags exactly.
void apply_config_json(const json& j, ClusterOpts& o) {
  if (!j.is_object()) throw FormatError("config file must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "window") {
        o.cfg.window = value.get<int>();
      } else if (key == "pca-fraction") {
        o.cfg.pca_fraction = value.get<double>();
      } else if (key == "depth") {
        o.cfg.depth = value.get<int>();
      } else if (key == "mu") {
        o.cfg.mu = value.get<double>();
      } else if (key == "lambda") {
        o.cfg.lambda = value.get<double>();
      } else if (key == "max-outer-iters") {
        o.cfg.max_outer_iters = value.get<int>();
      } else if (key == "stop-tol") {
        o.cfg.stop_tol = value.get<double>();
      } else if (key == "mode") {
        o.mode_str = value.get<std::string>();
      } else if (key == "z-mode") {
        o.z_mode_str = value.get<std::string>();
      } else if (key == "nonneg-project") {
        o.cfg.nonneg_project = value.get<bool>();
      } else if (key == "seed") {
        o.cfg.seed = value.get<std::uint64_t>();
      } else if (key == "k") {
        o.cfg.k_clusters = value.get<int>();
      } else if (key == "normalize-features") {
        o.cfg.normalize_features = value.get<bool>();
      } else if (key == "normalize-codes") {
        o.cfg.normalize_codes = value.get<bool>();
      } else if (key == "lasso-tol") {
        o.cfg.lasso_tol = value.get<double>();
      } else if (key == "lasso-max-iter") {
        o.cfg.lasso_max_iter = value.get<int>();
      } else if (key == "threads") {
        o.cfg.threads = value.get<int>();
      } else if (key == "include-unlabeled") {
        o.cfg.include_unlabeled = value.get<bool>();
      } else {
        throw InvalidInput("config: unknown key \"" + key + "\"");
      }
    } catch (const json::exception&) {
      throw FormatError("config: bad value type for key \"" + key + "\"");
    }
  }
}

void preload_config(int argc, char** argv, ClusterOpts& o) {
  std::string path;
  for (int i = 0; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
    }
  }
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw FormatError("config file is not valid JSON: " +
                      std::string(e.what()));
  }
  apply_config_json(j, o);
}

json config_echo(const ClusterOpts& o, int k) {
  return json{{"window", o.cfg.window},
              {"pca-fraction", o.cfg.pca_fraction},
              {"depth", o.cfg.depth},
              {"mu", o.cfg.mu},
              {"lambda", o.cfg.lambda},
              {"max-outer-iters", o.cfg.max_outer_iters},
              {"stop-tol", o.cfg.stop_tol},
              {"mode", normalize_token(o.mode_str)},
              {"z-mode", normalize_token(o.z_mode_str)},
              {"nonneg-project", o.cfg.nonneg_project},
              {"seed", o.cfg.seed},
              {"k", k},
              {"normalize-features", o.cfg.normalize_features},
              {"normalize-codes", o.cfg.normalize_codes},
              {"lasso-tol", o.cfg.lasso_tol},
              {"lasso-max-iter", o.cfg.lasso_max_iter},
              {"threads", o.cfg.threads},
              {"include-unlabeled", o.cfg.include_unlabeled}};
}

dataio::LabelMap truth_csv_to_map(const std::string& path, int height,
                                  int width) {
  dataio::LabelMap lm;
  lm.height = height;
  lm.width = width;
  lm.labels.assign(static_cast<std::size_t>(height) * width, 0);
  for (const auto& [r, c, l] : dataio::read_label_csv(path)) {
    if (r < 0 || r >= height || c < 0 || c >= width) {
      throw InvalidInput("truth CSV position out of image bounds");
    }
    if (l < 0) throw InvalidInput("truth CSV contains a negative label");
    lm.labels[static_cast<std::size_t>(r) * width + c] = l;
  }
  return lm;
}

int run_cluster(ClusterOpts& o) {
  const bool have_features = !o.features_path.empty();
  const bool have_cube = !o.cube_path.empty();
  if (have_features == have_cube) {
    std::cerr << "error: provide exactly one of --features or --cube\n";
    return 1;
  }
  o.cfg.mode = parse_mode(o.mode_str);
  o.cfg.z_mode = parse_z_mode(o.z_mode_str);

  FeatureMatrix fm;
  std::vector<int> truth;
  bool have_truth = false;
  int H = 0, W = 0;

  if (have_cube) {
    auto bundle = dataio::read_cube(o.cube_path);
    H = bundle.cube.height;
    W = bundle.cube.width;
    std::optional<dataio::LabelMap> truth_map = std::move(bundle.labels);
    if (!o.truth_path.empty()) {
      truth_map = truth_csv_to_map(o.truth_path, H, W);
    }
    const dataio::LabelMap* mask =
        (!o.cfg.include_unlabeled && truth_map) ? &*truth_map : nullptr;
    const auto raw = features::extract_patches(bundle.cube, o.cfg.window, mask);
    auto [feat, model] = features::pca_fit_transform(raw, o.cfg.pca_fraction);
    fm = std::move(feat);
    if (truth_map) {
      truth.reserve(fm.pixel_index.size());
      for (const auto& [r, c] : fm.pixel_index) {
        truth.push_back(truth_map->at(r, c));
      }
      have_truth = true;
    }
  } else {
    fm = dataio::read_feature_csv(o.features_path);
    if (!o.truth_path.empty()) {
      std::map<std::pair<int, int>, int> by_pos;
      for (const auto& [r, c, l] : dataio::read_label_csv(o.truth_path)) {
        by_pos[{r, c}] = l;
      }
      truth.reserve(fm.pixel_index.size());
      for (const auto& pos : fm.pixel_index) {
        const auto it = by_pos.find(pos);
        truth.push_back(it == by_pos.end() ? 0 : it->second);
      }
      have_truth = true;
    }
  }

  if (o.cfg.normalize_features) features::normalize_columns(fm.X);

  int k = o.cfg.k_clusters;
  if (k < 2) {
    if (have_truth) {
      std::set<int> distinct;
      for (int t : truth) {
        if (t != 0) distinct.insert(t);
      }
      k = static_cast<int>(distinct.size());
    }
    if (k < 2) {
      std::cerr << "error: pass --k, or provide truth labels with at least "
                   "two classes to derive it\n";
      return 1;
    }
    o.cfg.k_clusters = k;
  }

  const std::vector<int>* truth_ptr = have_truth ? &truth : nullptr;
  const RunResult res = o.cfg.mode == Mode::joint
                            ? run_joint(fm.X, o.cfg, truth_ptr)
                            : run_piecemeal(fm.X, o.cfg, truth_ptr);

  const fs::path out(o.out_dir);
  fs::create_directories(out);
  write_trace_csv(res.trace, out / "trace.csv");
  if (res.report) {
    std::ofstream mf(out / "metrics.json", std::ios::trunc);
    if (!mf) throw IoError("cannot write metrics.json");
    mf << metrics::to_json(*res.report) << "\n";
  }
  if (have_cube) {
    std::vector<int> full(static_cast<std::size_t>(H) * W, 0);
    for (std::size_t j = 0; j < fm.pixel_index.size(); ++j) {
      const auto& [r, c] = fm.pixel_index[j];
      full[static_cast<std::size_t>(r) * W + c] = res.assignment.labels[j] + 1;
    }
    dataio::write_cluster_map(full, H, W, out / "clusters");
  } else {
    std::vector<std::tuple<int, int, int>> rows;
    rows.reserve(fm.pixel_index.size());
    for (std::size_t j = 0; j < fm.pixel_index.size(); ++j) {
      rows.emplace_back(fm.pixel_index[j].first, fm.pixel_index[j].second,
                        res.assignment.labels[j]);
    }
    dataio::write_label_csv(rows, out / "clusters.csv");
  }
  {
    json manifest{{"version", kVersion},
                  {"config", config_echo(o, k)},
                  {"seed", o.cfg.seed},
                  {"m", static_cast<std::int64_t>(fm.X.cols())},
                  {"k", k},
                  {"iterations", res.iterations},
                  {"converged", res.converged},
                  {"wall_time_s", res.wall_time_s}};
    std::ofstream mf(out / "manifest.json", std::ios::trunc);
    if (!mf) throw IoError("cannot write manifest.json");
    mf << manifest.dump(2) << "\n";
  }
  if (res.assignment.degenerate) {
    std::cerr << "warning: at least one cluster came back empty\n";
  }
  return 0;
}

struct SynthOpts {
  dataio::SyntheticSpec spec;
  std::string out_dir;
};

int run_synth(const SynthOpts& o) {
  const auto [fm, truth] = dataio::synth_subspaces(o.spec);
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  features::write_feature_csv(fm, out / "X.csv");
  std::vector<std::tuple<int, int, int>> rows;
  rows.reserve(truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    rows.emplace_back(static_cast<int>(j), 0, truth[j]);
  }
  dataio::write_label_csv(rows, out / "y.csv");
  return 0;
}

struct FeaturesOpts {
  std::string cube_path;
  std::string out_path;
  int window = 3;
  double pca_fraction = 0.10;
  bool normalize = true;
  bool include_unlabeled = false;
};

int run_features(const FeaturesOpts& o) {
  const auto bundle = dataio::read_cube(o.cube_path);
  const dataio::LabelMap* mask =
      (!o.include_unlabeled && bundle.labels) ? &*bundle.labels : nullptr;
  const auto raw = features::extract_patches(bundle.cube, o.window, mask);
  auto [fm, model] = features::pca_fit_transform(raw, o.pca_fraction);
  if (o.normalize) features::normalize_columns(fm.X);
  features::write_feature_csv(fm, o.out_path);
  return 0;
}

struct MetricsOpts {
  std::string pred_path;
  std::string truth_path;
  std::string nmi_norm = "geometric";
};

int run_metrics(const MetricsOpts& o) {
  const auto norm = parse_nmi_norm(o.nmi_norm);
  std::map<std::pair<int, int>, int> pred_by_pos;
  for (const auto& [r, c, l] : dataio::read_label_csv(o.pred_path)) {
    pred_by_pos[{r, c}] = l;
  }
  std::vector<int> pred, truth;
  for (const auto& [r, c, l] : dataio::read_label_csv(o.truth_path)) {
    if (l == 0) continue;
    const auto it = pred_by_pos.find({r, c});
    if (it == pred_by_pos.end()) {
      std::ostringstream os;
      os << "prediction missing for labeled position (" << r << "," << c
         << ")";
      throw InvalidInput(os.str());
    }
    pred.push_back(it->second);
    truth.push_back(l);
  }
  const auto report = metrics::evaluate(pred, truth, norm);
  std::cout << metrics::to_json(report) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Hyperspectral pixel clustering via multi-layer dictionary "
               "learning with self-expressive codes"};
  app.require_subcommand(1);

  ClusterOpts cl;
  SynthOpts sy;
  FeaturesOpts fe;
  MetricsOpts me;

  auto* cluster = app.add_subcommand(
      "cluster", "Cluster a hyperspectral cube or a precomputed feature CSV");
  cluster->add_option("--features", cl.features_path,
                      "Feature CSV (one column per sample)");
  cluster->add_option("--cube", cl.cube_path, "Cube header JSON");
  cluster->add_option("--truth", cl.truth_path,
                      "Truth label CSV (overrides labels shipped with a cube)");
  cluster->add_option("--config", cl.config_path,
                      "JSON config; keys match these flags, flags win");
  cluster->add_option("--k", cl.cfg.k_clusters, "Number of clusters");
  cluster->add_option("--window", cl.cfg.window, "Patch window (odd)");
  cluster->add_option("--pca-fraction", cl.cfg.pca_fraction,
                      "Fraction of patch components kept");
  cluster->add_option("--depth", cl.cfg.depth, "Dictionary layers (1-4)");
  cluster->add_option("--mu", cl.cfg.mu, "Self-expression coupling weight");
  cluster->add_option("--lambda", cl.cfg.lambda, "Lasso sparsity weight");
  cluster->add_option("--max-outer-iters", cl.cfg.max_outer_iters,
                      "Outer iteration cap");
  cluster->add_option("--stop-tol", cl.cfg.stop_tol,
                      "Relative code-change stopping threshold");
  cluster->add_option("--mode", cl.mode_str, "joint or piecemeal");
  cluster->add_option("--z-mode", cl.z_mode_str,
                      "paper-exact or gradient-exact coefficient update");
  cluster->add_flag("--nonneg-project,!--no-nonneg-project",
                    cl.cfg.nonneg_project,
                    "Clamp coefficients to be nonnegative");
  cluster->add_option("--seed", cl.cfg.seed, "RNG seed");
  cluster->add_flag("--normalize-features,!--no-normalize-features",
                    cl.cfg.normalize_features,
                    "Unit-normalize feature columns");
  cluster->add_flag("--normalize-codes,!--no-normalize-codes",
                    cl.cfg.normalize_codes,
                    "Unit-normalize coefficient columns before the lasso");
  cluster->add_option("--lasso-tol", cl.cfg.lasso_tol,
                      "Lasso relative objective tolerance");
  cluster->add_option("--lasso-max-iter", cl.cfg.lasso_max_iter,
                      "Lasso iteration cap");
  cluster->add_option("--threads", cl.cfg.threads,
                      "Worker threads for the code matrix (0 = auto)");
  cluster->add_flag("--include-unlabeled,!--no-include-unlabeled",
                    cl.cfg.include_unlabeled,
                    "Keep unlabeled pixels instead of masking them out");
  cluster->add_option("-o,--output", cl.out_dir, "Output directory")
      ->required();

  auto* synth = app.add_subcommand(
      "synth", "Generate a union-of-subspaces benchmark feature set");
  synth->add_option("--clusters", sy.spec.clusters, "Number of subspaces");
  synth->add_option("--subspace-dim", sy.spec.subspace_dim,
                    "Dimension of each subspace");
  synth->add_option("--ambient", sy.spec.ambient_dim, "Ambient dimension");
  synth->add_option("--per-cluster", sy.spec.points_per_cluster,
                    "Points per subspace");
  synth->add_option("--sigma", sy.spec.noise_sigma, "Noise level");
  synth->add_option("--seed", sy.spec.seed, "RNG seed");
  synth->add_option("-o,--output", sy.out_dir, "Output directory")->required();

  auto* feats = app.add_subcommand(
      "features", "Extract patch + PCA features from a cube");
  feats->add_option("--cube", fe.cube_path, "Cube header JSON")->required();
  feats->add_option("--window", fe.window, "Patch window (odd)");
  feats->add_option("--pca-fraction", fe.pca_fraction,
                    "Fraction of patch components kept");
  feats->add_flag("--normalize-features,!--no-normalize-features",
                  fe.normalize, "Unit-normalize feature columns");
  feats->add_flag("--include-unlabeled,!--no-include-unlabeled",
                  fe.include_unlabeled,
                  "Keep unlabeled pixels instead of masking them out");
  feats->add_option("-o,--output", fe.out_path, "Output CSV")->required();

  auto* mets = app.add_subcommand(
      "metrics", "Score a prediction CSV against a truth CSV");
  mets->add_option("--pred", me.pred_path, "Predicted label CSV")->required();
  mets->add_option("--truth", me.truth_path, "Truth label CSV")->required();
  mets->add_option("--nmi-norm", me.nmi_norm, "geometric or arithmetic");

  try {
    preload_config(argc, argv, cl);
    app.parse(argc, argv);
    if (app.got_subcommand(cluster)) return run_cluster(cl);
    if (app.got_subcommand(synth)) return run_synth(sy);
    if (app.got_subcommand(feats)) return run_features(fe);
    if (app.got_subcommand(mets)) return run_metrics(me);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace hsseg::pipeline
