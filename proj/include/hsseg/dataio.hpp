#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hsseg/common.hpp"

namespace hsseg::dataio {

/// H x W x B image volume, band-interleaved-by-pixel, pixels row-major.
struct HyperCube {
  int height = 0;
  int width = 0;
  int bands = 0;
  std::vector<double> values;  // (r*width + c)*bands + b

  double at(int r, int c, int b) const {
    return values[static_cast<std::size_t>((r * width + c) * bands + b)];
  }
};

/// Per-pixel integer labels; 0 means unlabeled/background, classes are 1..K.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> labels;  // row-major

  int at(int r, int c) const {
    return labels[static_cast<std::size_t>(r * width + c)];
  }
};

struct SyntheticSpec {
  int clusters = 2;
  int subspace_dim = 1;
  int ambient_dim = 2;
  int points_per_cluster = 1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct CubeBundle {
  HyperCube cube;
  std::optional<LabelMap> labels;
};

/// Loads a cube container: JSON header + raw little-endian f64 payload,
/// plus an optional int32 label payload referenced by the header.
CubeBundle read_cube(const std::filesystem::path& header_path);

/// Writes the cube container next to `header_path` (payload files share its
/// stem). Counterpart of read_cube; round-trips bit-exactly.
void write_cube(const HyperCube& cube, const std::optional<LabelMap>& labels,
                const std::filesystem::path& header_path);

/// Emits `base`.csv (header "row,col,label", one line per pixel) and
/// `base`.pgm (binary P5, labels scaled to [0,255]).
void write_cluster_map(const std::vector<int>& labels, int height, int width,
                       const std::filesystem::path& base);

/// Rows of a (row,col,label) CSV written by write_cluster_map or by hand.
std::vector<std::tuple<int, int, int>> read_label_csv(
    const std::filesystem::path& path);

/// Writes a (row,col,label) CSV with header line.
void write_label_csv(const std::vector<std::tuple<int, int, int>>& rows,
                     const std::filesystem::path& path);

/// Union-of-subspaces sampler: per cluster an orthonormal basis from a seeded
/// Gaussian, points U*w + sigma*eps, columns normalized to unit l2 norm.
/// Ground-truth labels are 1-based (0 stays reserved for unlabeled).
std::pair<FeatureMatrix, std::vector<int>> synth_subspaces(
    const SyntheticSpec& spec);

/// Plain numeric CSV helpers (full double precision, row-major text).
void write_matrix_csv(const Matrix& M, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace hsseg::dataio
