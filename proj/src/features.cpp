#include "hsseg/features.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hsseg::features {

namespace {

// Mirror index into [0, n) without repeating the boundary sample.
int reflect101(int x, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  x = ((x % period) + period) % period;
  return x < n ? x : period - x;
}

// Flip eigenvector signs so the largest-magnitude entry is positive; breaks
// the sign ambiguity deterministically.
void fix_signs(Matrix& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index imax = 0;
    basis.col(c).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, c) < 0) basis.col(c) = -basis.col(c);
  }
}

}  // namespace

FeatureMatrix extract_patches(const dataio::HyperCube& cube, int window,
                              const dataio::LabelMap* mask) {
  const int H = cube.height, W = cube.width, B = cube.bands;
  if (window < 1 || window % 2 == 0) {
    throw InvalidInput("extract_patches: window must be odd and >= 1");
  }
  if (window > 2 * std::min(H, W) - 1) {
    throw InvalidInput("extract_patches: window too large for image");
  }
  if (mask && (mask->height != H || mask->width != W)) {
    throw InvalidInput("extract_patches: mask dimensions mismatch");
  }

  std::vector<std::pair<int, int>> keep;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      if (!mask || mask->at(r, c) != 0) keep.emplace_back(r, c);
    }
  }
  if (keep.empty()) throw DegenerateData("extract_patches: no pixels retained");

  const int half = window / 2;
  const Eigen::Index d = static_cast<Eigen::Index>(window) * window * B;
  FeatureMatrix fm;
  fm.X.resize(d, static_cast<Eigen::Index>(keep.size()));
  fm.pixel_index = keep;

  for (std::size_t j = 0; j < keep.size(); ++j) {
    const auto [r, c] = keep[j];
    Eigen::Index row = 0;
    for (int dr = -half; dr <= half; ++dr) {
      const int rr = reflect101(r + dr, H);
      for (int dc = -half; dc <= half; ++dc) {
        const int cc = reflect101(c + dc, W);
        for (int b = 0; b < B; ++b) {
          fm.X(row++, static_cast<Eigen::Index>(j)) = cube.at(rr, cc, b);
        }
      }
    }
  }
  return fm;
}

std::pair<FeatureMatrix, PcaModel> pca_fit_transform(const FeatureMatrix& raw,
                                                     double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw InvalidInput("pca: keep_fraction must be in (0, 1]");
  }
  const Eigen::Index d_raw = raw.X.rows();
  const Eigen::Index m = raw.X.cols();
  if (m < 2) throw InvalidInput("pca: need at least 2 samples");
  check_finite(raw.X, "pca input");

  const Vector mean = raw.X.rowwise().mean();
  const Matrix Xc = raw.X.colwise() - mean;
  if (Xc.squaredNorm() <= 1e-30) {
    throw DegenerateData("pca: all columns identical");
  }

  // ceil with a small backoff so exact products like 0.10 * 1800 do not get
  // bumped up by binary representation error.
  const int d = std::max(
      1, static_cast<int>(
             std::ceil(keep_fraction * static_cast<double>(d_raw) - 1e-9)));

  Matrix basis(d_raw, d);
  Vector all_eigs;

  if (d_raw <= m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Xc * Xc.transpose());
    if (es.info() != Eigen::Success) throw NumericError("pca: eigensolver");
    all_eigs = es.eigenvalues().reverse();  // descending scatter eigenvalues
    const double lmax = std::max(all_eigs(0), 0.0);
    for (int k = 0; k < d; ++k) {
      if (all_eigs(k) <= 1e-12 * lmax) {
        throw DegenerateData("pca: requested components exceed data rank");
      }
      basis.col(k) = es.eigenvectors().col(d_raw - 1 - k);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Xc.transpose() * Xc);
    if (es.info() != Eigen::Success) throw NumericError("pca: eigensolver");
    Vector gram = es.eigenvalues().reverse();
    all_eigs = Vector::Zero(d_raw);
    all_eigs.head(m) = gram;
    const double lmax = std::max(gram(0), 0.0);
    for (int k = 0; k < d; ++k) {
      if (k >= m || gram(k) <= 1e-12 * lmax) {
        throw DegenerateData("pca: requested components exceed data rank");
      }
      basis.col(k) = Xc * es.eigenvectors().col(m - 1 - k) / std::sqrt(gram(k));
    }
  }
  for (Eigen::Index i = 0; i < all_eigs.size(); ++i) {
    all_eigs(i) = std::max(all_eigs(i), 0.0);
  }
  fix_signs(basis);

  PcaModel model;
  model.mean = mean;
  model.basis = basis;
  model.explained = all_eigs;

  FeatureMatrix out;
  out.X = basis.transpose() * Xc;
  out.pixel_index = raw.pixel_index;
  return {std::move(out), std::move(model)};
}

void normalize_columns(Matrix& X) {
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double n = X.col(c).norm();
    if (n > 0.0) X.col(c) /= n;
  }
}

void write_feature_csv(const FeatureMatrix& fm,
                       const std::filesystem::path& path) {
  if (fm.pixel_index.size() != static_cast<std::size_t>(fm.X.cols())) {
    throw InvalidInput("write_feature_csv: pixel index size mismatch");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write feature CSV: " + path.string());
  out << std::setprecision(17);
  for (std::size_t j = 0; j < fm.pixel_index.size(); ++j) {
    if (j) out << ",";
    out << fm.pixel_index[j].first << ":" << fm.pixel_index[j].second;
  }
  out << "\n";
  for (Eigen::Index r = 0; r < fm.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < fm.X.cols(); ++c) {
      if (c) out << ",";
      out << fm.X(r, c);
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw FormatError("feature CSV missing header: " + path.string());
  }
  FeatureMatrix fm;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      const auto colon = cell.find(':');
      if (colon == std::string::npos) {
        throw FormatError("feature CSV header cell lacks ':': " + cell);
      }
      try {
        fm.pixel_index.emplace_back(std::stoi(cell.substr(0, colon)),
                                    std::stoi(cell.substr(colon + 1)));
      } catch (const std::exception&) {
        throw FormatError("malformed feature CSV header cell: " + cell);
      }
    }
  }
  const std::size_t m = fm.pixel_index.size();
  if (m == 0) throw FormatError("feature CSV has empty header");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(m);
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("malformed feature CSV cell: " + cell);
      }
    }
    if (row.size() != m) {
      throw FormatError("feature CSV row width mismatch: " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("feature CSV has no data rows");
  fm.X.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      fm.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  return fm;
}

}  // namespace hsseg::features
