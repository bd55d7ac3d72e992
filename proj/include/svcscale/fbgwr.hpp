#pragma once

#include "svcscale/types.hpp"

namespace svcscale {

// Shared geometry for a backfitting run.
struct BackfitGeometry {
  MatrixXd dist;
  MatrixXd sortedNeighborDist;  // adaptive mode only

  static BackfitGeometry from(const SpatialDataset& data, KernelMode mode);
};

struct BackfitState {
  MatrixXd B;            // current coefficient surfaces
  VectorXd bandwidths;   // one per coefficient (distance or neighbor count)
  int iteration = 0;     // completed sweeps
  std::vector<double> rssHistory;  // recorded once per full sweep
};

struct ScalarSmootherEval {
  double criterion = 0.0;
  double trS = 0.0;
  double rss = 0.0;
};

// Scores the one-predictor local regression of r on x under the weight
// matrix W (row i = weights at site i).
ScalarSmootherEval evaluate_scalar_smoother(const VectorXd& x, const VectorXd& r,
                                            const MatrixXd& W, CalibrationCriterion criterion);

// One backfitting update of coefficient k: forms the partial residual,
// recalibrates the k-th bandwidth against it, and refreshes B column k with
// the per-site scalar weighted solve. Sites whose local denominator
// vanishes are solved as zero and appended to flaggedSites. Passing
// recalibrate = false freezes the stored bandwidth (plain coordinate
// sweep).
void backfit_step(const SpatialDataset& data, const BackfitGeometry& geometry, KernelMode mode,
                  CalibrationCriterion criterion, Index k, BackfitState& state,
                  std::vector<Index>* flaggedSites, bool recalibrate = true);

// Flexible-bandwidth fit: initializes from the calibrated single-bandwidth
// fit and sweeps coefficients until the relative RSS change drops below
// 1e-5 (cap 50 sweeps; the fit is returned non-converged past the cap).
SvcFit fbgwr_fit(const SpatialDataset& data, KernelMode mode, CalibrationCriterion criterion);
SvcFit fbgwr_fit(const SpatialDataset& data, KernelMode mode, CalibrationCriterion criterion,
                 const BackfitGeometry& geometry);

}  // namespace svcscale
