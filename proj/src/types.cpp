#include "svcscale/types.hpp"

#include "svcscale/spatial.hpp"

#include <cmath>

namespace svcscale {

std::string to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::Gwr: return "gwr";
    case ModelTag::Gwra: return "gwra";
    case ModelTag::FbGwr: return "fbgwr";
    case ModelTag::FbGwra: return "fbgwra";
    case ModelTag::Esf: return "esf";
    case ModelTag::ReEsf: return "reesf";
  }
  return "unknown";
}

ModelTag model_tag_from_string(const std::string& name) {
  if (name == "gwr") return ModelTag::Gwr;
  if (name == "gwra") return ModelTag::Gwra;
  if (name == "fbgwr") return ModelTag::FbGwr;
  if (name == "fbgwra") return ModelTag::FbGwra;
  if (name == "esf") return ModelTag::Esf;
  if (name == "reesf") return ModelTag::ReEsf;
  throw ConfigError("unknown model name: " + name);
}

SpatialDataset SpatialDataset::make(MatrixXd coords, MatrixXd X, VectorXd y) {
  const Index n = X.rows();
  const Index k = X.cols();
  if (coords.rows() != n || y.size() != n)
    throw DataError("coords, X and y must agree on the sample count");
  if (coords.cols() != 2) throw DataError("coords must have two columns");
  if (n < k + 1) throw DataError("need at least K+1 samples");
  if (!coords.allFinite()) throw DataError("non-finite coordinate");
  if (!X.allFinite() || !y.allFinite()) throw DataError("non-finite value in X or y");
  if ((X.col(0).array() != 1.0).any())
    throw DataError("first column of X must be the intercept (all ones)");

  SpatialDataset d;
  d.coords = std::move(coords);
  d.X = std::move(X);
  d.y = std::move(y);
  // Duplicate coordinates are permitted but flagged; adaptive bandwidths
  // may become invalid on such data.
  for (Index i = 0; i < n && !d.hasDuplicateCoords; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (d.coords.row(i) == d.coords.row(j)) {
        d.hasDuplicateCoords = true;
        break;
      }
  return d;
}

void KernelSpec::validate(Index n, Index k) const {
  if (bandwidths.size() == 0) return;  // calibration request
  if (bandwidths.size() != 1 && bandwidths.size() != k)
    throw ConfigError("bandwidth vector must have length 1 or K");
  for (Index i = 0; i < bandwidths.size(); ++i) {
    const double b = bandwidths[i];
    if (!std::isfinite(b)) throw ConfigError("non-finite bandwidth");
    if (mode == KernelMode::FixedDistance) {
      if (b <= 0.0) throw ConfigError("fixed bandwidth must be strictly positive");
    } else {
      if (b != std::floor(b)) throw ConfigError("adaptive bandwidth must be an integer neighbor count");
      if (b < static_cast<double>(k + 1) || b > static_cast<double>(n))
        throw ConfigError("adaptive neighbor count must lie in [K+1, N]");
    }
  }
}

KernelSpec KernelSpec::fixed(double bandwidth) {
  KernelSpec s;
  s.mode = KernelMode::FixedDistance;
  s.bandwidths = VectorXd::Constant(1, bandwidth);
  return s;
}

KernelSpec KernelSpec::fixed(VectorXd bandwidths) {
  KernelSpec s;
  s.mode = KernelMode::FixedDistance;
  s.bandwidths = std::move(bandwidths);
  return s;
}

KernelSpec KernelSpec::adaptive(Index neighborCount) {
  KernelSpec s;
  s.mode = KernelMode::AdaptiveNeighbor;
  s.bandwidths = VectorXd::Constant(1, static_cast<double>(neighborCount));
  return s;
}

KernelSpec KernelSpec::adaptive(VectorXd neighborCounts) {
  KernelSpec s;
  s.mode = KernelMode::AdaptiveNeighbor;
  s.bandwidths = std::move(neighborCounts);
  return s;
}

KernelSpec KernelSpec::calibrated(KernelMode mode) {
  KernelSpec s;
  s.mode = mode;
  return s;
}

}  // namespace svcscale
