#include "hsseg/ddl.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "hsseg/dataio.hpp"
#include "hsseg/numerics.hpp"

namespace hsseg::ddl {

using nlohmann::json;

LayerSchedule LayerSchedule::halving(int input_dim, int depth) {
  if (depth < 1 || depth > 4) {
    throw InvalidInput("LayerSchedule: depth must be between 1 and 4");
  }
  if (input_dim < 2) {
    throw InvalidInput("LayerSchedule: input_dim must be >= 2");
  }
  LayerSchedule s;
  s.depth = depth;
  int prev = input_dim;
  for (int l = 0; l < depth; ++l) {
    prev = std::max(2, prev / 2);
    s.atoms.push_back(prev);
  }
  return s;
}

LayerSchedule LayerSchedule::with_atoms(std::vector<int> atoms) {
  if (atoms.empty() || atoms.size() > 4) {
    throw InvalidInput("LayerSchedule: need 1 to 4 layers");
  }
  for (int a : atoms) {
    if (a < 2) throw InvalidInput("LayerSchedule: every layer needs >= 2 atoms");
  }
  LayerSchedule s;
  s.depth = static_cast<int>(atoms.size());
  s.atoms = std::move(atoms);
  return s;
}

DdlState init_state(const Matrix& X, const LayerSchedule& schedule,
                    std::uint64_t seed, double mu) {
  if (X.rows() < 1 || X.cols() < 1) throw InvalidInput("init_state: empty X");
  if (mu < 0.0) throw InvalidInput("init_state: mu must be >= 0");
  check_finite(X, "init_state X");
  if (static_cast<int>(schedule.atoms.size()) != schedule.depth) {
    throw InvalidInput("init_state: schedule atoms/depth mismatch");
  }

  Rng rng(seed);
  DdlState state;
  state.mu = mu;
  state.iteration = 0;
  int rows = static_cast<int>(X.rows());
  for (int l = 0; l < schedule.depth; ++l) {
    const int cols = schedule.atoms[static_cast<std::size_t>(l)];
    Matrix D(rows, cols);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) D(r, c) = rng.normal();
      const double n = D.col(c).norm();
      if (n > 0.0) D.col(c) /= n;
    }
    state.dictionaries.push_back(std::move(D));
    rows = cols;
  }
  if (schedule.atoms.back() >= X.cols()) {
    std::cerr << "warning: deepest layer has " << schedule.atoms.back()
              << " atoms but only " << X.cols()
              << " samples; representation is not overdetermined\n";
  }
  state.Z = numerics::pinv(composed(state)) * X;
  return state;
}

Matrix composed(const DdlState& state) {
  if (state.dictionaries.empty()) {
    throw InvalidInput("composed: no dictionaries");
  }
  Matrix P = state.dictionaries.front();
  for (std::size_t l = 1; l < state.dictionaries.size(); ++l) {
    P = P * state.dictionaries[l];
  }
  return P;
}

DdlState update_dictionary(const DdlState& state, const Matrix& X, int layer) {
  const int L = static_cast<int>(state.dictionaries.size());
  if (layer < 1 || layer > L) {
    throw InvalidInput("update_dictionary: layer out of range");
  }
  if (state.Z.cols() != X.cols()) {
    throw InvalidInput("update_dictionary: X/Z column mismatch");
  }

  // Suffix Q = D_{l+1} * ... * D_L * Z (just Z for the last layer).
  Matrix Q = state.Z;
  for (int l = L - 1; l >= layer; --l) {
    Q = state.dictionaries[static_cast<std::size_t>(l)] * Q;
  }

  Matrix target;
  if (layer == 1) {
    target = X * numerics::pinv(Q);
  } else {
    Matrix P = state.dictionaries.front();
    for (int l = 1; l < layer - 1; ++l) {
      P = P * state.dictionaries[static_cast<std::size_t>(l)];
    }
    target = numerics::pinv(P) * X * numerics::pinv(Q);
  }
  check_finite(target, "update_dictionary result");

  DdlState next = state;
  next.dictionaries[static_cast<std::size_t>(layer - 1)] = std::move(target);
  return next;
}

DdlState update_z(const DdlState& state, const Matrix& X, const Matrix& C,
                  ZMode mode) {
  if (C.rows() != C.cols()) throw InvalidInput("update_z: C must be square");
  if (C.rows() != X.cols()) {
    throw InvalidInput("update_z: C dimension must match sample count");
  }
  if (C.diagonal().cwiseAbs().maxCoeff() > 0.0) {
    throw InvalidInput("update_z: C must have zero diagonal");
  }

  const Matrix Dbar = composed(state);
  DdlState next = state;

  if (state.mu == 0.0) {
    next.Z = numerics::pinv(Dbar) * X;
    check_finite(next.Z, "update_z result");
    return next;
  }

  const Eigen::Index m = C.rows();
  const Matrix A = Dbar.transpose() * Dbar;
  const Matrix Q = Dbar.transpose() * X;
  Matrix B;
  if (mode == ZMode::paper_exact) {
    B = state.mu * (Matrix::Identity(m, m) - C);
  } else {
    const Matrix IC = Matrix::Identity(m, m) - C;
    B = state.mu * (IC * IC.transpose());
  }

  try {
    next.Z = numerics::sylvester_solve(A, B, Q);
  } catch (const SingularSylvester&) {
    const double ridge =
        1e-8 * A.trace() / static_cast<double>(std::max<Eigen::Index>(A.rows(), 1));
    const Matrix A2 =
        A + ridge * Matrix::Identity(A.rows(), A.cols());
    next.Z = numerics::sylvester_solve(A2, B, Q);
  }
  check_finite(next.Z, "update_z result");
  return next;
}

ObjectiveBreakdown objective(const DdlState& state, const Matrix& X,
                             const Matrix& C, double lambda) {
  ObjectiveBreakdown b;
  b.recon = (X - composed(state) * state.Z).squaredNorm();
  b.ssc = (state.Z - state.Z * C).squaredNorm();
  b.l1 = C.cwiseAbs().sum();
  b.total = b.recon + state.mu * b.ssc + lambda * b.l1;
  return b;
}

void save_state(const DdlState& state, std::uint64_t seed,
                const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<int> atoms;
  for (std::size_t l = 0; l < state.dictionaries.size(); ++l) {
    std::ostringstream name;
    name << "D" << (l + 1) << ".csv";
    dataio::write_matrix_csv(state.dictionaries[l], dir / name.str());
    atoms.push_back(static_cast<int>(state.dictionaries[l].cols()));
  }
  dataio::write_matrix_csv(state.Z, dir / "Z.csv");
  json j{{"depth", state.dictionaries.size()},
         {"atoms", atoms},
         {"mu", state.mu},
         {"iteration", state.iteration},
         {"seed", seed}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint manifest");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("checkpoint manifest write failed");
}

DdlState load_state(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open checkpoint manifest in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw FormatError("checkpoint manifest is not valid JSON: " +
                      std::string(e.what()));
  }
  if (!j.contains("depth") || !j.contains("atoms") || !j.contains("mu") ||
      !j.contains("iteration")) {
    throw FormatError("checkpoint manifest missing fields");
  }
  const int depth = j["depth"].get<int>();
  if (depth < 1 || depth > 4) throw FormatError("checkpoint: bad depth");

  DdlState state;
  state.mu = j["mu"].get<double>();
  state.iteration = j["iteration"].get<int>();
  for (int l = 1; l <= depth; ++l) {
    std::ostringstream name;
    name << "D" << l << ".csv";
    state.dictionaries.push_back(dataio::read_matrix_csv(dir / name.str()));
  }
  state.Z = dataio::read_matrix_csv(dir / "Z.csv");

  const auto atoms = j["atoms"].get<std::vector<int>>();
  if (static_cast<int>(atoms.size()) != depth) {
    throw FormatError("checkpoint: atoms/depth mismatch");
  }
  for (int l = 0; l < depth; ++l) {
    if (state.dictionaries[static_cast<std::size_t>(l)].cols() !=
        atoms[static_cast<std::size_t>(l)]) {
      throw FormatError("checkpoint: dictionary width disagrees with manifest");
    }
    if (l > 0 && state.dictionaries[static_cast<std::size_t>(l)].rows() !=
                     state.dictionaries[static_cast<std::size_t>(l - 1)].cols()) {
      throw FormatError("checkpoint: layer dimensions do not chain");
    }
  }
  if (state.Z.rows() != state.dictionaries.back().cols()) {
    throw FormatError("checkpoint: Z rows disagree with deepest layer");
  }
  return state;
}

}  // namespace hsseg::ddl
