#pragma once

#include "svcscale/types.hpp"

#include <functional>

namespace svcscale {

struct LocalFit {
  VectorXd beta;
  double leverage = 0.0;  // hat-matrix diagonal entry at the site
  bool singular = false;
};

// Weighted least squares at one site: [X'GX]^{-1} X'Gy with G = diag(w).
// A system whose eigenvalue condition estimate exceeds condThreshold is
// flagged and solved with the Moore-Penrose pseudo-inverse instead.
LocalFit gwr_fit_at_site(const MatrixXd& X, const VectorXd& y, const VectorXd& weights,
                         Index site, double condThreshold = 1e12);

struct GwrEvaluation {
  double criterion = 0.0;
  double trH = 0.0;
  double rss = 0.0;
  MatrixXd B;       // filled when surfaces are requested
  VectorXd fitted;  // idem
  std::vector<Index> singularSites;
};

// Runs the per-site solves for a full weight matrix (row i = weights of the
// local regression at site i) and scores the fit. The leave-one-out path
// refits every site with its own weight zeroed.
GwrEvaluation evaluate_gwr(const SpatialDataset& data, const MatrixXd& weights,
                           CalibrationCriterion criterion, bool wantSurfaces,
                           double condThreshold = 1e12);

// Corrected AIC for a smoother with trace trH; +inf when the denominator
// N - 2 - trH is not positive.
double gwr_aicc(double rss, double trH, Index n);

struct CalibrationResult {
  double bandwidth = 0.0;  // distance, or neighbor count for adaptive mode
  double criterion = 0.0;
};

// Bandwidth search: golden-section on the log-bandwidth over
// [dmin_pos/2, 2*dmax] in fixed mode, exhaustive integers [K+2, N] in
// adaptive mode. The objective maps a candidate bandwidth (or neighbor
// count) to its criterion value; +inf marks inadmissible candidates.
CalibrationResult calibrate_bandwidth(const MatrixXd& dist, Index k, KernelMode mode,
                                      const std::function<double(double)>& objective,
                                      double goldenRelTol = 1e-3);

// Single-bandwidth fit; calibrates first when the spec carries no
// bandwidth. Requires N > K + 3 for calibration.
SvcFit gwr_fit(const SpatialDataset& data, const KernelSpec& spec,
               CalibrationCriterion criterion);
SvcFit gwr_fit(const SpatialDataset& data, const KernelSpec& spec, CalibrationCriterion criterion,
               const MatrixXd& dist, const MatrixXd& sortedNeighborDist);

}  // namespace svcscale
