#pragma once

#include "svcscale/eigenbasis.hpp"
#include "svcscale/reesf.hpp"
#include "svcscale/types.hpp"

#include <variant>

namespace svcscale {

struct GwrComplexity {
  double bandwidth = 0.0;  // fixed distance
};
struct GwraComplexity {
  double neighborFraction = 0.0;  // of N; neighbor count = max(K+2, round(f*N))
};
struct EsfComplexity {
  double selectionRatio = 0.0;  // q: top ceil(q*K*L) eigenvector terms forced in
};
struct ReEsfComplexity {
  VectorXd alpha;
  VectorXd sigma;
};

using ComplexitySpec = std::variant<GwrComplexity, GwraComplexity, EsfComplexity, ReEsfComplexity>;

struct ComplexityResult {
  double pStar = 0.0;
  int singularCount = 0;  // pseudo-inverse fallbacks in the local solves
};

// Effective number of parameters from known parameters; no model fitting.
ComplexityResult effective_parameters(const SpatialDataset& data, const EigenBasis* basis,
                                      const ComplexitySpec& spec);

// Variant taking shared precomputed geometry (and, for the mixed model, a
// prebuilt cross-product cache) so experiment grids can amortize them.
ComplexityResult effective_parameters(const SpatialDataset& data, const MatrixXd& dist,
                                      const MatrixXd& sortedNeighborDist, const EigenBasis* basis,
                                      const ReEsfSystem* reesfSystem, const ComplexitySpec& spec);

// Column selection behind the forced-ESF complexity: the top
// ceil(q*K*L) candidate terms ranked by eigenvalue (ties by predictor
// index), always on top of the K predictor columns.
std::vector<std::pair<Index, Index>> forced_esf_terms(Index k, Index l, double ratio);

}  // namespace svcscale
