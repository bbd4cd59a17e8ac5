#pragma once

#include <filesystem>
#include <vector>

#include "hsseg/common.hpp"

namespace hsseg::ddl {

// Atom counts per layer.  The composed dictionary is the left-to-right
// product D1 * ... * DL, so atoms[l] is both the column count of layer l and
// the row count of layer l+1.
struct LayerSchedule {
  int depth = 1;
  std::vector<int> atoms;

  // Halves the width at each layer, never dropping below 2 atoms.
  static LayerSchedule halving(int input_dim, int depth);
  // Explicit widths; 1 to 4 layers, each with at least 2 atoms.
  static LayerSchedule with_atoms(std::vector<int> atoms);
};

struct DdlState {
  std::vector<Matrix> dictionaries;
  Matrix Z;
  double mu = 1.0;
  int iteration = 0;
};

struct ObjectiveBreakdown {
  double recon = 0.0;
  double ssc = 0.0;
  double l1 = 0.0;
  double total = 0.0;
};

// Coefficient update variants: paper_exact solves the Sylvester system with
// B = mu*(I - C); gradient_exact uses B = mu*(I - C)*(I - C)^T, which zeroes
// the exact gradient of the quadratic objective in Z.
enum class ZMode { paper_exact, gradient_exact };

// Random unit-column dictionaries plus the least-squares Z for the composed
// product.  Warns on stderr when the deepest layer is wider than the sample
// count.
DdlState init_state(const Matrix& X, const LayerSchedule& schedule,
                    std::uint64_t seed, double mu = 1.0);

// Product D1 * ... * DL.
Matrix composed(const DdlState& state);

// Closed-form block update of one dictionary (1-based layer index), holding
// everything else fixed: D_l = pinv(prefix) * X * pinv(suffix * Z).
DdlState update_dictionary(const DdlState& state, const Matrix& X, int layer);

// Coefficient update with the code matrix C held fixed.  mu == 0 reduces to
// plain least squares.  On a singular Sylvester system the solve is retried
// once with a small ridge added to the Gram matrix.
DdlState update_z(const DdlState& state, const Matrix& X, const Matrix& C,
                  ZMode mode);

// recon + mu * ssc + lambda * l1 where recon = |X - Dbar*Z|_F^2,
// ssc = |Z - Z*C|_F^2, l1 = sum |C_ij|.
ObjectiveBreakdown objective(const DdlState& state, const Matrix& X,
                             const Matrix& C, double lambda);

// Directory checkpoint: D1..DL.csv, Z.csv, manifest.json.
void save_state(const DdlState& state, std::uint64_t seed,
                const std::filesystem::path& dir);
DdlState load_state(const std::filesystem::path& dir);

}  // namespace hsseg::ddl
