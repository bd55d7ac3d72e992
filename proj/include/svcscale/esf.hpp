#pragma once

#include "svcscale/eigenbasis.hpp"
#include "svcscale/types.hpp"

namespace svcscale {

struct EsfSelection {
  std::vector<std::pair<Index, Index>> selected;  // (predictor k, eigenvector l)
  VectorXd gamma;       // aligned with `selected`
  VectorXd betaGlobal;  // constant part per predictor
  double adjustedR2 = 0.0;
  std::vector<double> adjustedR2Path;  // value after each accepted term
};

// Candidate design: the K predictor columns followed by the Hadamard
// products x_k o e_l for every k (outer) and l (inner).
MatrixXd build_candidates(const SpatialDataset& data, const EigenBasis& basis);

// Forward selection over the eigenvector-product terms, maximizing adjusted
// R^2; the K predictor columns are always retained. A candidate is admitted
// only when the bordered design stays full rank with condition below 1e12.
EsfSelection esf_select(const SpatialDataset& data, const EigenBasis& basis);

SvcFit esf_fit(const SpatialDataset& data, const EigenBasis& basis);
SvcFit esf_fit(const SpatialDataset& data, const EigenBasis& basis, EsfSelection& selectionOut);

}  // namespace svcscale
