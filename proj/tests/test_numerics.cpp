#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsseg/numerics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hsseg;
using testutil::random_matrix;
using testutil::random_vector;

TEST_CASE("pinv of identity is identity") {
  const Matrix I = Matrix::Identity(2, 2);
  CHECK((numerics::pinv(I) - I).norm() < 1e-14);
}

TEST_CASE("pinv zeroes out null directions") {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.0;
  const Matrix P = numerics::pinv(D);
  CHECK(P(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(P(0, 1)) < 1e-14);
  CHECK(std::abs(P(1, 0)) < 1e-14);
  CHECK(std::abs(P(1, 1)) < 1e-14);
}

TEST_CASE("pinv solves least squares for full-column-rank systems") {
  Rng rng(11);
  const Matrix A = random_matrix(rng, 12, 5);
  const Vector b = random_vector(rng, 12);
  const Vector x = numerics::pinv(A) * b;
  const Vector x_ne = (A.transpose() * A).ldlt().solve(A.transpose() * b);
  CHECK((x - x_ne).norm() < 1e-9);
}

TEST_CASE("pinv satisfies the Penrose conditions across shapes") {
  Rng rng(17);
  for (const auto [r, c] : {std::pair{6, 3}, std::pair{3, 6}, std::pair{5, 5},
                            std::pair{8, 4}}) {
    Matrix A = random_matrix(rng, r, c);
    if (r == 5) A.col(4) = A.col(3);  // exercise a rank-deficient square
    const Matrix P = numerics::pinv(A);
    CHECK((A * P * A - A).norm() < 1e-10 * std::max(1.0, A.norm()));
    CHECK((P * A * P - P).norm() < 1e-10 * std::max(1.0, P.norm()));
    CHECK(((A * P) - (A * P).transpose()).norm() < 1e-10);
    CHECK(((P * A) - (P * A).transpose()).norm() < 1e-10);
  }
}

TEST_CASE("sylvester solve halves Q when both coefficients are identities") {
  Rng rng(3);
  const Matrix Q = random_matrix(rng, 3, 4);
  const Matrix Z = numerics::sylvester_solve(Matrix::Identity(3, 3),
                                             Matrix::Identity(4, 4), Q);
  CHECK((Z - Q / 2.0).norm() < 1e-12);
}

TEST_CASE("sylvester solve decouples for diagonal coefficients") {
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 2.0, 5.0;
  Matrix B = Matrix::Zero(3, 3);
  B.diagonal() << 1.0, 3.0, 7.0;
  Rng rng(4);
  const Matrix Q = random_matrix(rng, 2, 3);
  const Matrix Z = numerics::sylvester_solve(A, B, Q);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(Z(i, j) ==
            doctest::Approx(Q(i, j) / (A(i, i) + B(j, j))).epsilon(1e-12));
    }
  }
}

TEST_CASE("sylvester solve agrees with the Kronecker-system oracle") {
  Rng rng(23);
  for (int inst = 0; inst < 8; ++inst) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    const int m = 2 + static_cast<int>(rng.uniform_int(6));
    const Matrix M = random_matrix(rng, n, n);
    const Matrix N = random_matrix(rng, m, m);
    const Matrix A = M.transpose() * M + Matrix::Identity(n, n);
    const Matrix B = N.transpose() * N + Matrix::Identity(m, m);
    const Matrix Q = random_matrix(rng, n, m);
    const Matrix Z = numerics::sylvester_solve(A, B, Q);
    const Matrix Z_oracle = oracles::kron_sylvester(A, B, Q);
    CHECK((Z - Z_oracle).norm() < 1e-8 * std::max(1.0, Z_oracle.norm()));
    CHECK((A * Z + Z * B - Q).norm() < 1e-8 * std::max(1.0, Q.norm()));
  }
}

TEST_CASE("sylvester solve is bitwise deterministic") {
  Rng rng(5);
  const Matrix M = random_matrix(rng, 4, 4);
  const Matrix A = M.transpose() * M + Matrix::Identity(4, 4);
  const Matrix N = random_matrix(rng, 5, 5);
  const Matrix B = N.transpose() * N;
  const Matrix Q = random_matrix(rng, 4, 5);
  const Matrix Z1 = numerics::sylvester_solve(A, B, Q);
  const Matrix Z2 = numerics::sylvester_solve(A, B, Q);
  CHECK((Z1.array() == Z2.array()).all());
}

TEST_CASE("sylvester solve reports singular spectra") {
  Matrix A(1, 1), B(1, 1), Q(1, 1);
  A << 1.0;
  B << -1.0;
  Q << 1.0;
  CHECK_THROWS_AS(numerics::sylvester_solve(A, B, Q), SingularSylvester);
}

TEST_CASE("eigh returns the requested extreme pairs of a diagonal matrix") {
  Matrix S = Matrix::Zero(3, 3);
  S.diagonal() << 3.0, 1.0, 2.0;
  const auto small = numerics::eigh(S, 2, numerics::Which::smallest);
  CHECK(small.values(0) == doctest::Approx(1.0));
  CHECK(small.values(1) == doctest::Approx(2.0));
  CHECK(std::abs(small.vectors.col(0)(1)) == doctest::Approx(1.0));
  const auto large = numerics::eigh(S, 2, numerics::Which::largest);
  CHECK(large.values(0) == doctest::Approx(2.0));
  CHECK(large.values(1) == doctest::Approx(3.0));
}

TEST_CASE("eigh handles fully degenerate spectra") {
  const auto r = numerics::eigh(Matrix::Identity(4, 4), 2,
                                numerics::Which::smallest);
  CHECK(r.values(0) == doctest::Approx(1.0));
  CHECK(r.values(1) == doctest::Approx(1.0));
  // Eigenvectors stay orthonormal even when the eigenvalue is repeated.
  CHECK((r.vectors.transpose() * r.vectors - Matrix::Identity(2, 2)).norm() <
        1e-12);
}

TEST_CASE("eigh matches characteristic-polynomial roots") {
  Rng rng(101);
  for (int inst = 0; inst < 5; ++inst) {
    const int n = 3 + static_cast<int>(rng.uniform_int(4));
    const Matrix G = random_matrix(rng, n, n);
    const Matrix S = (G + G.transpose()) / 2.0;
    auto roots = oracles::charpoly_eigs(S);
    std::sort(roots.begin(), roots.end());
    const auto r = numerics::eigh(S, n, numerics::Which::smallest);
    for (int i = 0; i < n; ++i) {
      CHECK(r.values(i) ==
            doctest::Approx(roots[static_cast<std::size_t>(i)]).epsilon(1e-8));
    }
    // Residual check ties vectors to values.
    for (int i = 0; i < n; ++i) {
      CHECK((S * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm() <
            1e-9 * std::max(1.0, S.norm()));
    }
  }
}

TEST_CASE("eigh rejects asymmetric input") {
  Matrix S(2, 2);
  S << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(numerics::eigh(S, 1, numerics::Which::smallest),
                  InvalidInput);
}

TEST_CASE("kmeans separates two points into singleton clusters") {
  Matrix pts(2, 1);
  pts << 0.0, 10.0;
  const auto labels = numerics::kmeans(pts, 2, 0);
  CHECK(labels[0] != labels[1]);
}

TEST_CASE("kmeans recovers well-separated blobs") {
  Rng rng(7);
  Matrix pts(30, 2);
  for (int i = 0; i < 30; ++i) {
    const int g = i / 10;
    pts(i, 0) = 10.0 * g + 0.1 * rng.normal();
    pts(i, 1) = -5.0 * g + 0.1 * rng.normal();
  }
  const auto labels = numerics::kmeans(pts, 3, 42);
  for (int g = 0; g < 3; ++g) {
    for (int i = 1; i < 10; ++i) {
      CHECK(labels[static_cast<std::size_t>(10 * g + i)] ==
            labels[static_cast<std::size_t>(10 * g)]);
    }
  }
  CHECK(labels[0] != labels[10]);
  CHECK(labels[10] != labels[20]);
  CHECK(labels[0] != labels[20]);
}

TEST_CASE("kmeans with restarts reaches the exhaustive optimum on 8 points") {
  Rng rng(13);
  const Matrix pts = random_matrix(rng, 8, 2);
  const auto labels = numerics::kmeans(pts, 2, 9);
  double wcss = 0.0;
  for (int g = 0; g < 2; ++g) {
    Vector centroid = Vector::Zero(2);
    int count = 0;
    for (int i = 0; i < 8; ++i) {
      if (labels[static_cast<std::size_t>(i)] == g) {
        centroid += pts.row(i).transpose();
        ++count;
      }
    }
    if (count == 0) continue;
    centroid /= count;
    for (int i = 0; i < 8; ++i) {
      if (labels[static_cast<std::size_t>(i)] == g) {
        wcss += (pts.row(i).transpose() - centroid).squaredNorm();
      }
    }
  }
  const double best = oracles::exhaustive_kmeans_wcss(pts, 2);
  CHECK(wcss == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("kmeans is deterministic in the seed") {
  Rng rng(19);
  const Matrix pts = random_matrix(rng, 25, 3);
  const auto a = numerics::kmeans(pts, 4, 77);
  const auto b = numerics::kmeans(pts, 4, 77);
  CHECK(a == b);
  CHECK_THROWS_AS(numerics::kmeans(pts, 0, 1), InvalidInput);
  CHECK_THROWS_AS(numerics::kmeans(pts, 26, 1), InvalidInput);
}
