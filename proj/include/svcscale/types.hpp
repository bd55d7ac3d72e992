#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace svcscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown on malformed configuration / flag schemas (CLI exit 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown on bad input data: non-numeric cells, missing columns, invalid
// matrices (CLI exit 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown when a model fit cannot be produced at all (CLI exit 4).
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModelTag { Gwr, Gwra, FbGwr, FbGwra, Esf, ReEsf };

std::string to_string(ModelTag tag);
ModelTag model_tag_from_string(const std::string& name);

// Sample sites with predictors and response. Column 0 of X is the
// intercept (identically 1); coordinates are planar.
struct SpatialDataset {
  MatrixXd coords;  // N x 2
  MatrixXd X;       // N x K
  VectorXd y;       // N
  bool hasDuplicateCoords = false;

  Index n() const { return X.rows(); }
  Index k() const { return X.cols(); }

  // Validates the invariants (N >= K+1, unit intercept column, finite
  // coordinates) and flags duplicate coordinates.
  static SpatialDataset make(MatrixXd coords, MatrixXd X, VectorXd y);
};

enum class KernelMode { FixedDistance, AdaptiveNeighbor };

// Exponential-kernel bandwidth specification. A single bandwidth drives a
// single-scale fit (GWR/GWRa); K bandwidths give every coefficient its own
// scale (FB-GWR/FB-GWRa). Adaptive entries hold neighbor counts; the
// neighbor ranking includes the site itself at rank 1.
struct KernelSpec {
  KernelMode mode = KernelMode::FixedDistance;
  VectorXd bandwidths;  // empty = calibrate

  bool wantsCalibration() const { return bandwidths.size() == 0; }
  void validate(Index n, Index k) const;

  static KernelSpec fixed(double bandwidth);
  static KernelSpec fixed(VectorXd bandwidths);
  static KernelSpec adaptive(Index neighborCount);
  static KernelSpec adaptive(VectorXd neighborCounts);
  static KernelSpec calibrated(KernelMode mode);
};

// Nonnegative connectivity with a zero diagonal; symmetric unless
// row-standardized.
struct ProximityMatrix {
  MatrixXd C;
  bool rowStandardized = false;
};

enum class CalibrationCriterion { LoocvMse, Aicc };

// Calibrated scale parameters; which fields are filled depends on the model.
struct ScaleParams {
  VectorXd bandwidths;  // GWR/GWRa: length 1; FB-GWR/FB-GWRa: length K
  std::vector<std::pair<Index, Index>> esfTerms;  // (predictor, eigenvector)
  VectorXd alpha;                                 // RE-ESF
  VectorXd sigmaGamma;                            // RE-ESF
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
};

struct SvcFit {
  ModelTag model = ModelTag::Gwr;
  MatrixXd B;  // N x K, row i = coefficient estimates at site i
  VectorXd fitted;
  VectorXd residuals;  // y - fitted, exactly
  double pStar = 0.0;
  std::vector<Index> singularSites;
  bool converged = true;
  ScaleParams scale;
  std::vector<double> rssHistory;  // backfitting sweeps only
};

}  // namespace svcscale
