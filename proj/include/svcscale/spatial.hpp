#pragma once

#include "svcscale/types.hpp"

namespace svcscale {

// Pairwise Euclidean distances; zero diagonal, symmetric. Throws DataError
// on non-finite coordinates.
MatrixXd distance_matrix(const MatrixXd& coords);

bool has_duplicate_coords(const MatrixXd& dist);

// Row i holds the distances from site i to all sites sorted ascending with
// ties broken by sample index. The site itself appears first (distance 0),
// so column j-1 is the distance to the j-th nearest neighbor.
MatrixXd sorted_neighbor_distances(const MatrixXd& dist);

// Per-site adaptive bandwidth: distance from site i to its j-th nearest
// neighbor. Throws DataError when that distance is zero (all j nearest
// neighbors duplicate site i).
VectorXd adaptive_bandwidths(const MatrixXd& sortedNeighborDist, Index neighborCount);

// Exponential kernel weights W(i,j) = exp(-d(i,j)/b_i). Row i is the
// diagonal of the local weight matrix at site i; the diagonal of W is 1.
MatrixXd kernel_weights_fixed(const MatrixXd& dist, double bandwidth);
MatrixXd kernel_weights_adaptive(const MatrixXd& dist, const MatrixXd& sortedNeighborDist,
                                 Index neighborCount);

// Dispatch on a KernelSpec; coefIndex selects the bandwidth when the spec
// carries one per coefficient (pass -1 for single-bandwidth specs).
MatrixXd kernel_weights(const MatrixXd& dist, const KernelSpec& spec, Index coefIndex = -1);

// Off-diagonal (i,j) = exp(-d(i,j)/b), zero diagonal; optionally
// row-standardized so every row sums to 1.
ProximityMatrix proximity_matrix(const MatrixXd& dist, double bandwidth, bool rowStandardize);

// Longest edge of the Euclidean minimum spanning tree over the sites.
double mst_longest_edge(const MatrixXd& dist);

}  // namespace svcscale
