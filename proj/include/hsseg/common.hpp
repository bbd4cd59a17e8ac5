#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsseg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base of all library errors. The CLI maps subclasses to exit codes:
/// input/data problems exit 2, numerical failures exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct SingularSylvester : Error {
  using Error::Error;
};
struct DegenerateData : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

/// Deterministic random source. mt19937_64's output sequence is fixed by the
/// standard; the scalings below avoid std::*_distribution, whose outputs are
/// not portable across standard libraries. Same seed => same stream anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal deviate (Box-Muller, second value cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = 1.0 - uniform();  // (0,1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  /// Uniform integer in [0,n); rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t lim = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = eng_();
    while (x < lim) x = eng_();
    return x % n;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Column-per-sample feature matrix with per-column image provenance.
struct FeatureMatrix {
  Matrix X;  // dim x samples
  std::vector<std::pair<int, int>> pixel_index;  // (row, col) of each column
};

inline void check_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

}  // namespace hsseg
