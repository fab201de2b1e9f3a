#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dal/manifold.hpp"

using namespace dal;

TEST_CASE("two points at distance r weight their edge e^{-1}") {
  Matrix X(2, 2);
  X << 0, 0, 3, 4;  // distance 5
  const Laplacian lap = build_laplacian(X, 1);
  CHECK(lap.sigma == Catch::Approx(5.0));
  const double w = std::exp(-1.0);
  CHECK(lap.matrix(0, 1) == Catch::Approx(-w).epsilon(1e-12));
  CHECK(lap.matrix(0, 0) == Catch::Approx(w).epsilon(1e-12));
  CHECK(lap.matrix(1, 1) == Catch::Approx(w).epsilon(1e-12));
}

TEST_CASE("identical points connect with unit weights") {
  Matrix X = Matrix::Zero(5, 3);
  const Laplacian lap = build_laplacian(X, 4);
  const Matrix A = Matrix(lap.matrix.diagonal().asDiagonal()) - lap.matrix;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      if (i != j) CHECK(A(i, j) == Catch::Approx(1.0));
  CHECK(lap.matrix.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
}

namespace {

Matrix random_points(Index n, Index d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = normal(rng);
  return X;
}

}  // namespace

TEST_CASE("Laplacian structural invariants") {
  const Matrix X = random_points(40, 3, 31);
  const Laplacian lap = build_laplacian(X, 6);

  CHECK((lap.matrix - lap.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(lap.matrix.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);

  auto rng = make_rng(37);
  std::normal_distribution<double> normal;
  const Matrix A = Matrix(lap.matrix.diagonal().asDiagonal()) - lap.matrix;
  for (int t = 0; t < 20; ++t) {
    Vector v(X.rows());
    for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    const double quad = v.dot(lap.matrix * v);
    CHECK(quad >= -1e-8);
    // quadratic-form identity x^T G x = 1/2 sum A_ij (x_i - x_j)^2
    double pair_sum = 0;
    for (Index i = 0; i < X.rows(); ++i)
      for (Index j = 0; j < X.rows(); ++j)
        pair_sum += A(i, j) * (v[i] - v[j]) * (v[i] - v[j]);
    CHECK(quad == Catch::Approx(0.5 * pair_sum).margin(1e-8));
  }
}

TEST_CASE("graph construction is permutation-equivariant") {
  const Matrix X = random_points(25, 2, 41);
  const Laplacian lap = build_laplacian(X, 5);

  std::vector<Index> perm(25);
  std::iota(perm.begin(), perm.end(), Index{0});
  auto rng = make_rng(43);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix Xp(25, 2);
  for (Index i = 0; i < 25; ++i) Xp.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
  const Laplacian lap_p = build_laplacian(Xp, 5);

  for (Index i = 0; i < 25; ++i)
    for (Index j = 0; j < 25; ++j)
      CHECK(lap_p.matrix(i, j) ==
            Catch::Approx(lap.matrix(perm[static_cast<std::size_t>(i)],
                                     perm[static_cast<std::size_t>(j)]))
                .margin(1e-12));
}

TEST_CASE("build_laplacian rejects out-of-range k") {
  const Matrix X = random_points(5, 2, 47);
  CHECK_THROWS_AS(build_laplacian(X, 0), Error);
  CHECK_THROWS_AS(build_laplacian(X, 5), Error);
}

TEST_CASE("manifold_penalty matches the pairwise double sum") {
  const Matrix X = random_points(18, 4, 53);
  const Laplacian lap = build_laplacian(X, 4);
  const Matrix A = Matrix(lap.matrix.diagonal().asDiagonal()) - lap.matrix;

  LinearModel model;
  model.weights = random_points(4, 3, 59);

  const double penalty = manifold_penalty(model, X, lap);
  CHECK(penalty >= 0.0);

  const Matrix F = X * model.weights;
  double pair_sum = 0;
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.rows(); ++j)
      pair_sum += A(i, j) * (F.row(i) - F.row(j)).squaredNorm();
  CHECK(penalty == Catch::Approx(0.5 * pair_sum).margin(1e-8));
}

TEST_CASE("manifold_penalty trivial zeroes") {
  const Matrix X = random_points(10, 2, 61);
  const Laplacian lap = build_laplacian(X, 3);

  LinearModel zero;
  zero.weights = Matrix::Zero(2, 4);
  CHECK(manifold_penalty(zero, X, lap) == 0.0);

  Laplacian disconnected;
  disconnected.matrix = Matrix::Zero(10, 10);
  disconnected.k = 1;
  disconnected.sigma = 1.0;
  LinearModel model;
  model.weights = random_points(2, 4, 67);
  CHECK(manifold_penalty(model, X, disconnected) == 0.0);
}

TEST_CASE("penalty ignores constant prediction shifts (G 1 = 0)") {
  const Matrix X = random_points(16, 3, 71);
  const Laplacian lap = build_laplacian(X, 5);
  LinearModel model;
  model.weights = random_points(3, 2, 73);

  const Matrix F = X * model.weights;
  Eigen::RowVector2d c(3.7, -1.2);
  const Matrix Fs = F.rowwise() + c;
  const double base = (F.transpose() * lap.matrix * F).trace();
  const double shifted = (Fs.transpose() * lap.matrix * Fs).trace();
  CHECK(base == Catch::Approx(shifted).margin(1e-8));
}

TEST_CASE("manifold_penalty rejects dimension mismatches") {
  const Matrix X = random_points(10, 3, 79);
  const Laplacian lap = build_laplacian(X, 3);
  LinearModel model;
  model.weights = random_points(4, 2, 83);  // wrong feature count
  CHECK_THROWS_AS(manifold_penalty(model, X, lap), Error);
}
