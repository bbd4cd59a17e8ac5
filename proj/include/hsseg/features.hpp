#pragma once

#include <filesystem>

#include "hsseg/common.hpp"
#include "hsseg/dataio.hpp"

namespace hsseg::features {

// Per-band PCA model fitted on mean-centered patch vectors.  `basis` has one
// orthonormal column per retained component; `explained` holds the scatter
// eigenvalues of all d_raw components in descending order.
struct PcaModel {
  Vector mean;
  Matrix basis;
  Vector explained;
};

// Stacks a (window x window x bands) neighborhood around every retained pixel
// into one column.  Out-of-bounds offsets mirror with the edge pixel not
// duplicated.  When `mask` is given, only pixels with a nonzero label are
// retained; pixel order is row-major over the image.
FeatureMatrix extract_patches(const dataio::HyperCube& cube, int window,
                              const dataio::LabelMap* mask = nullptr);

// Fits PCA on the columns of `raw` and projects them.  Keeps
// ceil(keep_fraction * d_raw) components.  Throws DegenerateData when the
// requested component count exceeds the rank of the centered data.
std::pair<FeatureMatrix, PcaModel> pca_fit_transform(const FeatureMatrix& raw,
                                                     double keep_fraction);

// Rescales every nonzero column to unit Euclidean norm, in place.
void normalize_columns(Matrix& X);

void write_feature_csv(const FeatureMatrix& fm,
                       const std::filesystem::path& path);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace hsseg::features
