#include "hsseg/dataio.hpp"

#include <json.hpp>

#include <Eigen/QR>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hsseg::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<char> read_binary(const fs::path& path, std::size_t expected) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat payload file: " + path.string());
  if (size != expected) {
    std::ostringstream os;
    os << "payload size mismatch for " << path.string() << ": expected "
       << expected << " bytes, found " << size;
    throw FormatError(os.str());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open payload file: " + path.string());
  std::vector<char> buf(expected);
  in.read(buf.data(), static_cast<std::streamsize>(expected));
  if (in.gcount() != static_cast<std::streamsize>(expected)) {
    throw IoError("short read on payload file: " + path.string());
  }
  return buf;
}

void write_binary(const fs::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed: " + path.string());
}

std::uint64_t bswap64(std::uint64_t x) {
  return ((x & 0x00000000000000ffULL) << 56) |
         ((x & 0x000000000000ff00ULL) << 40) |
         ((x & 0x0000000000ff0000ULL) << 24) |
         ((x & 0x00000000ff000000ULL) << 8) |
         ((x & 0x000000ff00000000ULL) >> 8) |
         ((x & 0x0000ff0000000000ULL) >> 24) |
         ((x & 0x00ff000000000000ULL) >> 40) |
         ((x & 0xff00000000000000ULL) >> 56);
}

std::uint32_t bswap32(std::uint32_t x) {
  return ((x & 0x000000ffu) << 24) | ((x & 0x0000ff00u) << 8) |
         ((x & 0x00ff0000u) >> 8) | ((x & 0xff000000u) >> 24);
}

constexpr bool kLittle = std::endian::native == std::endian::little;

std::vector<double> decode_f64le(const std::vector<char>& buf) {
  std::vector<double> out(buf.size() / 8);
  std::memcpy(out.data(), buf.data(), buf.size());
  if constexpr (!kLittle) {
    for (double& v : out) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      bits = bswap64(bits);
      std::memcpy(&v, &bits, 8);
    }
  }
  return out;
}

std::vector<std::int32_t> decode_i32le(const std::vector<char>& buf) {
  std::vector<std::int32_t> out(buf.size() / 4);
  std::memcpy(out.data(), buf.data(), buf.size());
  if constexpr (!kLittle) {
    for (std::int32_t& v : out) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = bswap32(bits);
      std::memcpy(&v, &bits, 4);
    }
  }
  return out;
}

int require_positive_int(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw FormatError(std::string("cube header: missing integer field '") +
                      key + "'");
  }
  const auto v = j[key].get<std::int64_t>();
  if (v < 1 || v > 1000000) {
    throw FormatError(std::string("cube header: field '") + key +
                      "' out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

CubeBundle read_cube(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw IoError("cannot open cube header: " + header_path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw FormatError("cube header is not valid JSON: " +
                      std::string(e.what()));
  }
  const int h = require_positive_int(j, "height");
  const int w = require_positive_int(j, "width");
  const int b = require_positive_int(j, "bands");
  if (j.value("dtype", "") != std::string("f64le")) {
    throw FormatError("cube header: dtype must be \"f64le\"");
  }
  if (j.value("order", "") != std::string("bip")) {
    throw FormatError("cube header: order must be \"bip\"");
  }
  if (!j.contains("data") || !j["data"].is_string()) {
    throw FormatError("cube header: missing \"data\" path");
  }
  const fs::path dir = header_path.parent_path();

  CubeBundle out;
  out.cube.height = h;
  out.cube.width = w;
  out.cube.bands = b;
  const std::size_t count = static_cast<std::size_t>(h) * w * b;
  out.cube.values =
      decode_f64le(read_binary(dir / j["data"].get<std::string>(), count * 8));
  for (double v : out.cube.values) {
    if (!std::isfinite(v)) {
      throw FormatError("cube payload contains non-finite values");
    }
  }

  if (j.contains("labels") && !j["labels"].is_null()) {
    if (!j["labels"].is_string()) {
      throw FormatError("cube header: \"labels\" must be a path");
    }
    const std::size_t n = static_cast<std::size_t>(h) * w;
    const auto raw =
        decode_i32le(read_binary(dir / j["labels"].get<std::string>(), n * 4));
    LabelMap lm;
    lm.height = h;
    lm.width = w;
    lm.labels.reserve(n);
    for (std::int32_t v : raw) {
      if (v < 0) throw FormatError("label payload contains negative labels");
      lm.labels.push_back(static_cast<int>(v));
    }
    out.labels = std::move(lm);
  }
  return out;
}

void write_cube(const HyperCube& cube, const std::optional<LabelMap>& labels,
                const fs::path& header_path) {
  const std::size_t count =
      static_cast<std::size_t>(cube.height) * cube.width * cube.bands;
  if (cube.values.size() != count) {
    throw InvalidInput("write_cube: value count does not match dimensions");
  }
  for (double v : cube.values) {
    if (!std::isfinite(v)) {
      throw InvalidInput("write_cube: non-finite values");
    }
  }
  const std::string stem = header_path.stem().string();
  const fs::path dir = header_path.parent_path();
  const std::string data_name = stem + ".f64";
  const std::string label_name = stem + ".i32";

  std::vector<char> buf(count * 8);
  std::memcpy(buf.data(), cube.values.data(), buf.size());
  if constexpr (!kLittle) {
    auto* words = reinterpret_cast<std::uint64_t*>(buf.data());
    for (std::size_t i = 0; i < count; ++i) words[i] = bswap64(words[i]);
  }
  write_binary(dir / data_name, buf.data(), buf.size());

  json j{{"height", cube.height}, {"width", cube.width},
         {"bands", cube.bands},   {"dtype", "f64le"},
         {"order", "bip"},        {"data", data_name}};
  if (labels) {
    if (labels->height != cube.height || labels->width != cube.width) {
      throw InvalidInput("write_cube: label map dimensions mismatch");
    }
    std::vector<std::int32_t> raw(labels->labels.begin(),
                                  labels->labels.end());
    std::vector<char> lbuf(raw.size() * 4);
    std::memcpy(lbuf.data(), raw.data(), lbuf.size());
    if constexpr (!kLittle) {
      auto* words = reinterpret_cast<std::uint32_t*>(lbuf.data());
      for (std::size_t i = 0; i < raw.size(); ++i) words[i] = bswap32(words[i]);
    }
    write_binary(dir / label_name, lbuf.data(), lbuf.size());
    j["labels"] = label_name;
  }
  std::ofstream out(header_path, std::ios::trunc);
  if (!out) throw IoError("cannot write header: " + header_path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + header_path.string());
}

void write_cluster_map(const std::vector<int>& labels, int height, int width,
                       const fs::path& base) {
  if (labels.size() != static_cast<std::size_t>(height) * width) {
    throw InvalidInput("write_cluster_map: label count != height*width");
  }
  fs::path csv = base;
  csv += ".csv";
  fs::path pgm = base;
  pgm += ".pgm";

  {
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw IoError("cannot write " + csv.string());
    out << "row,col,label\n";
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        out << r << "," << c << ","
            << labels[static_cast<std::size_t>(r * width + c)] << "\n";
      }
    }
    if (!out) throw IoError("write failed: " + csv.string());
  }
  {
    int max_label = 0;
    for (int v : labels) max_label = std::max(max_label, v);
    const double scale = max_label > 0 ? 255.0 / max_label : 0.0;
    std::ofstream out(pgm, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + pgm.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> px(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      px[i] = static_cast<unsigned char>(std::lround(labels[i] * scale));
    }
    out.write(reinterpret_cast<const char*>(px.data()),
              static_cast<std::streamsize>(px.size()));
    if (!out) throw IoError("write failed: " + pgm.string());
  }
}

std::vector<std::tuple<int, int, int>> read_label_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label CSV: " + path.string());
  std::vector<std::tuple<int, int, int>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      // Header line allowed; anything that does not start with a digit or
      // sign is treated as one.
      const char c = line[0];
      if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
            c == '+')) {
        continue;
      }
    }
    int r = 0, c = 0, l = 0;
    char comma1 = 0, comma2 = 0;
    std::istringstream ls(line);
    if (!(ls >> r >> comma1 >> c >> comma2 >> l) || comma1 != ',' ||
        comma2 != ',') {
      throw FormatError("malformed label CSV line in " + path.string() + ": " +
                        line);
    }
    rows.emplace_back(r, c, l);
  }
  return rows;
}

void write_label_csv(const std::vector<std::tuple<int, int, int>>& rows,
                     const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write label CSV: " + path.string());
  out << "row,col,label\n";
  for (const auto& [r, c, l] : rows) {
    out << r << "," << c << "," << l << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<FeatureMatrix, std::vector<int>> synth_subspaces(
    const SyntheticSpec& spec) {
  if (spec.clusters < 2) throw InvalidInput("synth: clusters must be >= 2");
  if (spec.subspace_dim < 1 || spec.subspace_dim >= spec.ambient_dim) {
    throw InvalidInput("synth: need 1 <= subspace_dim < ambient_dim");
  }
  if (spec.points_per_cluster < 1) {
    throw InvalidInput("synth: points_per_cluster must be >= 1");
  }
  if (spec.noise_sigma < 0.0) {
    throw InvalidInput("synth: noise_sigma must be >= 0");
  }

  const int m = spec.clusters * spec.points_per_cluster;
  Rng rng(spec.seed);
  Matrix X(spec.ambient_dim, m);
  std::vector<int> truth(static_cast<std::size_t>(m));

  for (int j = 0; j < spec.clusters; ++j) {
    Matrix G(spec.ambient_dim, spec.subspace_dim);
    for (int c = 0; c < spec.subspace_dim; ++c) {
      for (int r = 0; r < spec.ambient_dim; ++r) G(r, c) = rng.normal();
    }
    Eigen::HouseholderQR<Matrix> qr(G);
    const Matrix U = qr.householderQ() *
                     Matrix::Identity(spec.ambient_dim, spec.subspace_dim);
    for (int p = 0; p < spec.points_per_cluster; ++p) {
      const int col = j * spec.points_per_cluster + p;
      Vector w(spec.subspace_dim);
      for (int i = 0; i < spec.subspace_dim; ++i) w(i) = rng.normal();
      Vector x = U * w;
      for (int i = 0; i < spec.ambient_dim; ++i) {
        x(i) += spec.noise_sigma * rng.normal();
      }
      double nrm = x.norm();
      while (nrm < 1e-12) {  // essentially impossible, but stay deterministic
        for (int i = 0; i < spec.subspace_dim; ++i) w(i) = rng.normal();
        x = U * w;
        for (int i = 0; i < spec.ambient_dim; ++i) {
          x(i) += spec.noise_sigma * rng.normal();
        }
        nrm = x.norm();
      }
      X.col(col) = x / nrm;
      truth[static_cast<std::size_t>(col)] = j + 1;
    }
  }

  FeatureMatrix fm;
  fm.X = std::move(X);
  fm.pixel_index.reserve(static_cast<std::size_t>(m));
  for (int col = 0; col < m; ++col) fm.pixel_index.emplace_back(col, 0);
  return {std::move(fm), std::move(truth)};
}

void write_matrix_csv(const Matrix& M, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write matrix CSV: " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (c) out << ",";
      out << M(r, c);
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix CSV: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("malformed matrix CSV cell in " + path.string() +
                          ": " + cell);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged matrix CSV: " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty matrix CSV: " + path.string());
  Matrix M(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows.front().size(); ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  return M;
}

}  // namespace hsseg::dataio
