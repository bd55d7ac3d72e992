#include "svcscale/eigenbasis.hpp"

#include "svcscale/spatial.hpp"

#include <cmath>

namespace svcscale {

namespace {
constexpr double kEigenvalueRelTol = 1e-9;
constexpr double kSymmetryTol = 1e-10;
}

double moran_coefficient(const VectorXd& y, const ProximityMatrix& C) {
  const Index n = y.size();
  if (C.C.rows() != n || C.C.cols() != n) throw DataError("connectivity size mismatch");
  const double total = C.C.sum();
  if (total == 0.0) throw DataError("zero total connectivity");
  const VectorXd yc = y.array() - y.mean();
  const double denom = yc.squaredNorm();
  if (denom <= 1e-300) throw DataError("Moran coefficient undefined for constant y");
  const double numer = yc.dot(C.C * yc);
  return static_cast<double>(n) / total * (numer / denom);
}

EigenBasis moran_eigenbasis(const ProximityMatrix& C) {
  if (C.rowStandardized)
    throw DataError("eigenbasis requires the non-row-standardized connectivity");
  const Index n = C.C.rows();
  if (C.C.cols() != n) throw DataError("connectivity must be square");
  if ((C.C - C.C.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
    throw DataError("connectivity must be symmetric");
  if (C.C.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw DataError("connectivity must have a zero diagonal");

  // Double centering: MCM(i,j) = C(i,j) - rmean_i - rmean_j + mean(C).
  const VectorXd rowMeans = C.C.rowwise().mean();
  const double grandMean = C.C.mean();
  MatrixXd mcm = C.C;
  mcm.colwise() -= rowMeans;
  mcm.rowwise() -= rowMeans.transpose();
  mcm.array() += grandMean;

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(mcm);
  if (es.info() != Eigen::Success) throw FitError("eigendecomposition failed");
  const VectorXd& ev = es.eigenvalues();  // ascending
  const double evMax = ev[n - 1];
  const double tol = evMax > 0.0 ? kEigenvalueRelTol * evMax : 0.0;

  Index count = 0;
  for (Index i = 0; i < n; ++i)
    if (ev[i] > tol && ev[i] > 0.0) ++count;

  EigenBasis basis;
  basis.connectivitySum = C.C.sum();
  basis.E.resize(n, count);
  basis.lambda.resize(count);
  for (Index i = 0; i < count; ++i) {
    const Index src = n - 1 - i;  // descending order
    basis.lambda[i] = ev[src];
    basis.E.col(i) = es.eigenvectors().col(src);
  }
  return basis;
}

ProximityMatrix model_connectivity(const MatrixXd& dist, double* rangeOut) {
  const double range = mst_longest_edge(dist);
  if (rangeOut) *rangeOut = range;
  return proximity_matrix(dist, range, false);
}

EigenBasis build_model_basis(const MatrixXd& dist) {
  double range = 0.0;
  const ProximityMatrix C = model_connectivity(dist, &range);
  EigenBasis basis = moran_eigenbasis(C);
  basis.range = range;
  return basis;
}

}  // namespace svcscale
