#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "svcscale/eigenbasis.hpp"
#include "svcscale/rng.hpp"
#include "svcscale/spatial.hpp"

#include <cmath>

using namespace svcscale;

namespace {

ProximityMatrix random_connectivity(Index n, uint64_t seed) {
  SubstreamRng rng(seed);
  ProximityMatrix p;
  p.C = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double v = rng.uniform01();
      p.C(i, j) = v;
      p.C(j, i) = v;
    }
  return p;
}

MatrixXd centered(const MatrixXd& C) {
  const Index n = C.rows();
  const MatrixXd M = MatrixXd::Identity(n, n) - MatrixXd::Constant(n, n, 1.0 / n);
  return M * C * M;
}

}  // namespace

TEST_CASE("eigenvectors of the centered connectivity reproduce their eigenvalues") {
  for (uint64_t seed : {1, 2, 3}) {
    const Index n = 30;
    const ProximityMatrix C = random_connectivity(n, seed);
    const EigenBasis basis = moran_eigenbasis(C);
    REQUIRE(basis.l() > 0);
    const double scale = static_cast<double>(n) / basis.connectivitySum;
    for (Index l = 0; l < basis.l(); ++l) {
      const double mc = moran_coefficient(basis.E.col(l), C);
      CHECK(mc == doctest::Approx(scale * basis.lambda[l]).epsilon(1e-10));
    }
  }
}

TEST_CASE("eigenvalue sum equals the trace of the centered connectivity") {
  const Index n = 40;
  const ProximityMatrix C = random_connectivity(n, 9);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(centered(C.C));
  const double sum = es.eigenvalues().sum();
  CHECK(sum == doctest::Approx(centered(C.C).trace()).epsilon(1e-10));
  CHECK(sum == doctest::Approx(-C.C.sum() / n).epsilon(1e-8));
}

TEST_CASE("two-site connectivity has no positive eigenvalue") {
  ProximityMatrix C;
  C.C = MatrixXd::Zero(2, 2);
  C.C(0, 1) = 0.7;
  C.C(1, 0) = 0.7;
  // MCM = -0.7 * M with eigenvalues {0, -0.7}
  const MatrixXd mcm = centered(C.C);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(mcm);
  CHECK(es.eigenvalues()[0] == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(es.eigenvalues()[1] == doctest::Approx(0.0).epsilon(1e-12));
  const EigenBasis basis = moran_eigenbasis(C);
  CHECK(basis.l() == 0);
}

TEST_CASE("basis columns are orthonormal, centered and sorted") {
  const ProximityMatrix C = random_connectivity(35, 21);
  const EigenBasis basis = moran_eigenbasis(C);
  REQUIRE(basis.l() > 0);
  const MatrixXd gram = basis.E.transpose() * basis.E;
  CHECK((gram - MatrixXd::Identity(basis.l(), basis.l())).cwiseAbs().maxCoeff() < 1e-10);
  for (Index l = 0; l < basis.l(); ++l) CHECK(std::abs(basis.E.col(l).sum()) < 1e-10);
  for (Index l = 1; l < basis.l(); ++l) CHECK(basis.lambda[l] <= basis.lambda[l - 1]);
  CHECK(basis.lambda.minCoeff() > 0.0);
}

TEST_CASE("retained pairs reconstruct the positive part of the spectrum") {
  const ProximityMatrix C = random_connectivity(30, 33);
  const EigenBasis basis = moran_eigenbasis(C);
  const MatrixXd residual =
      centered(C.C) - basis.E * basis.lambda.asDiagonal() * basis.E.transpose();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(residual);
  CHECK(es.eigenvalues().maxCoeff() < 1e-8 * basis.lambda[0]);
}

TEST_CASE("degenerate inputs are rejected") {
  const ProximityMatrix C = random_connectivity(20, 41);
  CHECK_THROWS_AS(moran_coefficient(VectorXd::Constant(20, 3.0), C), DataError);

  ProximityMatrix zero;
  zero.C = MatrixXd::Zero(10, 10);
  SubstreamRng rng(5);
  CHECK_THROWS_AS(moran_coefficient(rng.normals(10), zero), DataError);

  ProximityMatrix asym = C;
  asym.C(0, 1) += 0.5;
  CHECK_THROWS_AS(moran_eigenbasis(asym), DataError);

  ProximityMatrix standardized = C;
  standardized.rowStandardized = true;
  CHECK_THROWS_AS(moran_eigenbasis(standardized), DataError);

  ProximityMatrix diag = C;
  diag.C(3, 3) = 0.2;
  CHECK_THROWS_AS(moran_eigenbasis(diag), DataError);
}

TEST_CASE("the null expectation of the statistic is -1/(N-1)") {
  const Index n = 25;
  const ProximityMatrix C = random_connectivity(n, 55);
  SubstreamRng rng(56);
  double sum = 0.0;
  const int draws = 4000;
  for (int t = 0; t < draws; ++t) sum += moran_coefficient(rng.normals(n), C);
  const double expectation = -1.0 / static_cast<double>(n - 1);
  CHECK(sum / draws == doctest::Approx(expectation).epsilon(0.25));
}

TEST_CASE("model connectivity uses the spanning-tree range with zero diagonal") {
  SubstreamRng rng(61);
  MatrixXd coords(40, 2);
  for (Index i = 0; i < 40; ++i) {
    coords(i, 0) = rng.normal();
    coords(i, 1) = rng.normal();
  }
  const MatrixXd dist = distance_matrix(coords);
  double range = 0.0;
  const ProximityMatrix C = model_connectivity(dist, &range);
  CHECK(range == doctest::Approx(mst_longest_edge(dist)));
  CHECK(C.C.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((C.C - C.C.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(C.rowStandardized);
  CHECK(C.C(0, 1) == doctest::Approx(std::exp(-dist(0, 1) / range)).epsilon(1e-12));

  const EigenBasis basis = build_model_basis(dist);
  CHECK(basis.range == doctest::Approx(range));
  CHECK(basis.l() > 0);
  CHECK(basis.l() < 40);
}
