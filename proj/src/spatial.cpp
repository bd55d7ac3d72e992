#include "svcscale/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace svcscale {

MatrixXd distance_matrix(const MatrixXd& coords) {
  if (!coords.allFinite()) throw DataError("non-finite coordinate");
  const Index n = coords.rows();
  MatrixXd dist(n, n);
  for (Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d = (coords.row(i) - coords.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

bool has_duplicate_coords(const MatrixXd& dist) {
  const Index n = dist.rows();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (dist(i, j) == 0.0) return true;
  return false;
}

MatrixXd sorted_neighbor_distances(const MatrixXd& dist) {
  const Index n = dist.rows();
  MatrixXd sorted(n, n);
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    // stable ascending by distance, ties by sample index
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;
    });
    for (Index r = 0; r < n; ++r) sorted(i, r) = dist(i, order[static_cast<size_t>(r)]);
  }
  return sorted;
}

VectorXd adaptive_bandwidths(const MatrixXd& sortedNeighborDist, Index neighborCount) {
  const Index n = sortedNeighborDist.rows();
  if (neighborCount < 1 || neighborCount > n)
    throw ConfigError("neighbor count out of range");
  VectorXd b = sortedNeighborDist.col(neighborCount - 1);
  for (Index i = 0; i < n; ++i)
    if (b[i] <= 0.0)
      throw DataError("adaptive bandwidth is zero: the j nearest neighbors duplicate site " +
                      std::to_string(i));
  return b;
}

MatrixXd kernel_weights_fixed(const MatrixXd& dist, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ConfigError("fixed bandwidth must be strictly positive");
  return (-dist / bandwidth).array().exp();
}

MatrixXd kernel_weights_adaptive(const MatrixXd& dist, const MatrixXd& sortedNeighborDist,
                                 Index neighborCount) {
  const VectorXd b = adaptive_bandwidths(sortedNeighborDist, neighborCount);
  const Index n = dist.rows();
  MatrixXd w(n, n);
  for (Index i = 0; i < n; ++i) w.row(i) = (-dist.row(i) / b[i]).array().exp();
  return w;
}

MatrixXd kernel_weights(const MatrixXd& dist, const KernelSpec& spec, Index coefIndex) {
  if (spec.bandwidths.size() == 0) throw ConfigError("kernel spec carries no bandwidth");
  double b;
  if (spec.bandwidths.size() == 1) {
    b = spec.bandwidths[0];
  } else {
    if (coefIndex < 0 || coefIndex >= spec.bandwidths.size())
      throw ConfigError("coefficient index required for per-coefficient bandwidths");
    b = spec.bandwidths[coefIndex];
  }
  if (spec.mode == KernelMode::FixedDistance) return kernel_weights_fixed(dist, b);
  return kernel_weights_adaptive(dist, sorted_neighbor_distances(dist),
                                 static_cast<Index>(b));
}

ProximityMatrix proximity_matrix(const MatrixXd& dist, double bandwidth, bool rowStandardize) {
  if (!(bandwidth > 0.0)) throw ConfigError("proximity bandwidth must be strictly positive");
  ProximityMatrix p;
  p.C = (-dist / bandwidth).array().exp();
  p.C.diagonal().setZero();
  if (rowStandardize) {
    const VectorXd rowSums = p.C.rowwise().sum();
    for (Index i = 0; i < rowSums.size(); ++i)
      if (rowSums[i] <= 0.0)
        throw DataError("cannot row-standardize: row " + std::to_string(i) +
                        " has no positive off-diagonal entry");
    p.C.array().colwise() /= rowSums.array();
    p.rowStandardized = true;
  }
  return p;
}

double mst_longest_edge(const MatrixXd& dist) {
  const Index n = dist.rows();
  if (n < 2) throw DataError("minimum spanning tree needs at least two sites");
  // Prim's algorithm on the dense distance matrix.
  std::vector<bool> inTree(static_cast<size_t>(n), false);
  std::vector<double> best(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  inTree[0] = true;
  for (Index j = 1; j < n; ++j) best[static_cast<size_t>(j)] = dist(0, j);
  double longest = 0.0;
  for (Index added = 1; added < n; ++added) {
    Index next = -1;
    double nextDist = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
      if (!inTree[static_cast<size_t>(j)] && best[static_cast<size_t>(j)] < nextDist) {
        next = j;
        nextDist = best[static_cast<size_t>(j)];
      }
    inTree[static_cast<size_t>(next)] = true;
    longest = std::max(longest, nextDist);
    for (Index j = 0; j < n; ++j)
      if (!inTree[static_cast<size_t>(j)])
        best[static_cast<size_t>(j)] = std::min(best[static_cast<size_t>(j)], dist(next, j));
  }
  return longest;
}

}  // namespace svcscale
