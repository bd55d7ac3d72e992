#pragma once

#include "svcscale/types.hpp"

namespace svcscale {

// Eigenvectors of the doubly centered connectivity matrix MCM restricted to
// positive eigenvalues; the basis shared by the spatial-filter models.
struct EigenBasis {
  MatrixXd E;        // N x L, orthonormal, columns sum to zero
  VectorXd lambda;   // strictly positive, descending
  double connectivitySum = 0.0;  // 1'C1
  double range = std::numeric_limits<double>::quiet_NaN();  // kernel range metadata

  Index l() const { return E.cols(); }
};

// Moran coefficient (N / 1'C1) * (y'MCMy) / (y'My). Throws DataError for a
// constant y or zero total connectivity.
double moran_coefficient(const VectorXd& y, const ProximityMatrix& C);

// Full symmetric eigendecomposition of MCM, retaining eigenpairs with
// lambda > 1e-9 * max(lambda). Requires a symmetric, zero-diagonal,
// non-row-standardized connectivity.
EigenBasis moran_eigenbasis(const ProximityMatrix& C);

// Model-fitting connectivity: symmetric exponential kernel with zero
// diagonal and range equal to the longest minimum-spanning-tree edge.
ProximityMatrix model_connectivity(const MatrixXd& dist, double* rangeOut = nullptr);

// Convenience: connectivity + eigendecomposition in one call.
EigenBasis build_model_basis(const MatrixXd& dist);

}  // namespace svcscale
