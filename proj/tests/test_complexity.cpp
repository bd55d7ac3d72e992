#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "svcscale/complexity.hpp"
#include "svcscale/rng.hpp"
#include "svcscale/spatial.hpp"

#include <cmath>

using namespace svcscale;

namespace {

struct Fixture {
  SpatialDataset data;
  EigenBasis basis;
  MatrixXd dist;
};

Fixture make_fixture(Index n, uint64_t seed) {
  SubstreamRng rng(seed);
  MatrixXd coords(n, 2);
  for (Index i = 0; i < n; ++i) {
    coords(i, 0) = rng.normal();
    coords(i, 1) = rng.normal();
  }
  MatrixXd X(n, 3);
  X.col(0).setOnes();
  X.col(1) = rng.normals(n);
  X.col(2) = rng.normals(n);
  MatrixXd dist = distance_matrix(coords);
  Fixture f{SpatialDataset::make(coords, X, VectorXd::Zero(n)), build_model_basis(dist),
            std::move(dist)};
  return f;
}

// explicit hat matrices, assembled the slow way
double dense_gwr_trace(const SpatialDataset& d, const MatrixXd& w) {
  double tr = 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    const VectorXd wi = w.row(i);
    const MatrixXd Xw = d.X.array().colwise() * wi.array();
    const MatrixXd A = d.X.transpose() * Xw;
    const Eigen::RowVectorXd row = d.X.row(i) * A.ldlt().solve(Xw.transpose());
    tr += row[i];
  }
  return tr;
}

}  // namespace

TEST_CASE("fixed-bandwidth trace equals the dense hat matrix") {
  const Fixture f = make_fixture(60, 3);
  for (double b : {0.5, 1.0, 2.0}) {
    const ComplexityResult r = effective_parameters(f.data, nullptr, GwrComplexity{b});
    CHECK(r.pStar ==
          doctest::Approx(dense_gwr_trace(f.data, kernel_weights_fixed(f.dist, b)))
              .epsilon(1e-8));
  }
}

TEST_CASE("adaptive trace equals the dense hat matrix") {
  const Fixture f = make_fixture(60, 5);
  const MatrixXd sorted = sorted_neighbor_distances(f.dist);
  for (double frac : {0.2, 0.5, 1.0}) {
    const ComplexityResult r = effective_parameters(f.data, nullptr, GwraComplexity{frac});
    const Index j = std::max<Index>(5, static_cast<Index>(std::llround(frac * 60)));
    CHECK(r.pStar ==
          doctest::Approx(dense_gwr_trace(f.data, kernel_weights_adaptive(f.dist, sorted, j)))
              .epsilon(1e-8));
  }
}

TEST_CASE("forced selection count and projection trace agree") {
  const Fixture f = make_fixture(50, 7);
  const Index l = f.basis.l();
  for (double q : {0.2, 0.4, 0.6, 0.8}) {
    const ComplexityResult r = effective_parameters(f.data, &f.basis, EsfComplexity{q});
    const Index expected = 3 + static_cast<Index>(std::ceil(q * 3 * l));
    CHECK(r.pStar == doctest::Approx(static_cast<double>(expected)));

    const auto terms = forced_esf_terms(3, l, q);
    MatrixXd design(50, 3 + static_cast<Index>(terms.size()));
    design.leftCols(3) = f.data.X;
    for (size_t t = 0; t < terms.size(); ++t)
      design.col(3 + static_cast<Index>(t)) =
          f.data.X.col(terms[t].first).cwiseProduct(f.basis.E.col(terms[t].second));
    const MatrixXd hat =
        design * (design.transpose() * design).ldlt().solve(design.transpose());
    CHECK(r.pStar == doctest::Approx(hat.trace()).epsilon(1e-8));
  }
}

TEST_CASE("forced terms are ranked by eigenvalue with predictor ties") {
  const auto terms = forced_esf_terms(3, 4, 0.5);  // ceil(0.5*12) = 6
  REQUIRE(terms.size() == 6);
  CHECK(terms[0] == std::pair<Index, Index>{0, 0});
  CHECK(terms[1] == std::pair<Index, Index>{1, 0});
  CHECK(terms[2] == std::pair<Index, Index>{2, 0});
  CHECK(terms[3] == std::pair<Index, Index>{0, 1});
  CHECK(terms[4] == std::pair<Index, Index>{1, 1});
  CHECK(terms[5] == std::pair<Index, Index>{2, 1});
}

TEST_CASE("mixed-model trace equals the bordered hat matrix") {
  const Fixture f = make_fixture(40, 9);
  const Index l = f.basis.l();
  const Index k = 3;
  const ReEsfSystem system(f.data, f.basis);
  SubstreamRng rng(10);
  for (double sigma : {0.1, 1.0}) {
    ReEsfComplexity spec;
    spec.alpha = VectorXd::Constant(k, 0.6);
    spec.sigma = VectorXd::Constant(k, sigma);
    const ComplexityResult r =
        effective_parameters(f.data, f.dist, MatrixXd(), &f.basis, &system, spec);

    // Assemble H = [X  E~ Ld] P^{-1} [X  E~ Ld]' with the literal blocks.
    MatrixXd etilde(40, k * l);
    for (Index kk = 0; kk < k; ++kk)
      etilde.middleCols(kk * l, l) = f.basis.E.array().colwise() * f.data.X.col(kk).array();
    VectorXd ld(k * l);
    for (Index kk = 0; kk < k; ++kk)
      ld.segment(kk * l, l) =
          sigma * scale_spectrum(f.basis.lambda, 0.6).array().sqrt();
    MatrixXd z(40, k + k * l);
    z.leftCols(k) = f.data.X;
    z.rightCols(k * l) = etilde * ld.asDiagonal();
    MatrixXd p = z.transpose() * z;
    p.bottomRightCorner(k * l, k * l).diagonal().array() += 1.0;
    const MatrixXd hat = z * p.ldlt().solve(z.transpose());
    CHECK(r.pStar == doctest::Approx(hat.trace()).epsilon(1e-8));
  }
}

TEST_CASE("global limits collapse to the predictor count") {
  const Fixture f = make_fixture(45, 11);
  const double big = 1e7 * f.dist.maxCoeff();
  CHECK(effective_parameters(f.data, nullptr, GwrComplexity{big}).pStar ==
        doctest::Approx(3.0).epsilon(1e-6));

  ReEsfComplexity spec;
  spec.alpha = VectorXd::Ones(3);
  spec.sigma = VectorXd::Zero(3);
  CHECK(effective_parameters(f.data, &f.basis, spec).pStar ==
        doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("complexity stays within its structural bounds") {
  const Fixture f = make_fixture(50, 13);
  for (double b : {0.1, 0.5, 2.0})
    CHECK(effective_parameters(f.data, nullptr, GwrComplexity{b}).pStar >= 0.0);
  ReEsfComplexity spec;
  spec.alpha = VectorXd::Constant(3, 0.2);
  spec.sigma = VectorXd::Constant(3, 5.0);
  const double p = effective_parameters(f.data, &f.basis, spec).pStar;
  CHECK(p >= 0.0);
  CHECK(p <= 3.0 + 3.0 * f.basis.l());
}

TEST_CASE("near-singular local systems are counted, not fatal") {
  SubstreamRng rng(15);
  const Index n = 40;
  MatrixXd coords(n, 2);
  for (Index i = 0; i < n; ++i) {
    coords(i, 0) = rng.normal();
    coords(i, 1) = rng.normal();
  }
  MatrixXd X(n, 3);
  X.col(0).setOnes();
  X.col(1) = rng.normals(n);
  X.col(2) = X.col(1);  // collinear
  const SpatialDataset d = SpatialDataset::make(coords, X, VectorXd::Zero(n));
  const ComplexityResult r = effective_parameters(d, nullptr, GwrComplexity{1.0});
  CHECK(r.singularCount == 40);
  CHECK(std::isfinite(r.pStar));
}
