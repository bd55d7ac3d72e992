#include "svcscale/gwr.hpp"

#include "svcscale/spatial.hpp"
#include "svcscale/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svcscale {

namespace {

// Rank cutoff for the pseudo-inverse, relative to the largest eigenvalue.
constexpr double kPinvTol = 1e-12;

struct LocalSystem {
  MatrixXd A;   // X'GX
  VectorXd b;   // X'Gy
};

LocalSystem local_system(const MatrixXd& X, const VectorXd& y, const VectorXd& w) {
  const MatrixXd Xw = X.array().colwise() * w.array();
  LocalSystem s;
  s.A.noalias() = X.transpose() * Xw;
  s.b.noalias() = Xw.transpose() * y;
  return s;
}

LocalFit solve_local(const LocalSystem& sys, const Eigen::RowVectorXd& xSite, double selfWeight,
                     double condThreshold) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sys.A + sys.A.transpose()));
  const VectorXd& ev = es.eigenvalues();  // ascending
  const MatrixXd& V = es.eigenvectors();
  const Index k = ev.size();
  const double evMax = ev[k - 1];
  const double evMin = ev[0];

  LocalFit fit;
  fit.singular = !(evMax > 0.0) || evMin <= 0.0 || evMax / evMin > condThreshold;

  // Spectral solve; singular systems drop directions below the cutoff,
  // i.e. pinv(A) applied to the normal equations.
  const double cutoff = fit.singular ? evMax * kPinvTol : -1.0;
  VectorXd beta = VectorXd::Zero(k);
  double leverage = 0.0;
  if (evMax > 0.0) {
    for (Index j = 0; j < k; ++j) {
      if (ev[j] <= cutoff || ev[j] <= 0.0) continue;
      const double proj = V.col(j).dot(sys.b);
      beta += V.col(j) * (proj / ev[j]);
      const double xproj = xSite.dot(V.col(j));
      leverage += xproj * xproj / ev[j];
    }
  }
  fit.beta = std::move(beta);
  fit.leverage = leverage * selfWeight;
  return fit;
}

}  // namespace

LocalFit gwr_fit_at_site(const MatrixXd& X, const VectorXd& y, const VectorXd& weights,
                         Index site, double condThreshold) {
  const LocalSystem sys = local_system(X, y, weights);
  return solve_local(sys, X.row(site), weights[site], condThreshold);
}

double gwr_aicc(double rss, double trH, Index n) {
  const double nd = static_cast<double>(n);
  const double denom = nd - 2.0 - trH;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  const double sigma2 = std::max(rss / nd, 1e-300);
  return nd * std::log(sigma2) + nd * std::log(2.0 * M_PI) + nd * (nd + trH) / denom;
}

GwrEvaluation evaluate_gwr(const SpatialDataset& data, const MatrixXd& weights,
                           CalibrationCriterion criterion, bool wantSurfaces,
                           double condThreshold) {
  const Index n = data.n();
  const Index k = data.k();
  GwrEvaluation eval;
  if (wantSurfaces) {
    eval.B.resize(n, k);
    eval.fitted.resize(n);
  }

  if (criterion == CalibrationCriterion::LoocvMse && !wantSurfaces) {
    double sse = 0.0;
    VectorXd w(n);
    for (Index i = 0; i < n; ++i) {
      w = weights.row(i);
      w[i] = 0.0;  // leave site i out
      const LocalFit fit = gwr_fit_at_site(data.X, data.y, w, i, condThreshold);
      if (fit.singular) eval.singularSites.push_back(i);
      const double pred = data.X.row(i).dot(fit.beta);
      sse += (data.y[i] - pred) * (data.y[i] - pred);
    }
    eval.criterion = sse / static_cast<double>(n);
    eval.trH = std::numeric_limits<double>::quiet_NaN();
    eval.rss = std::numeric_limits<double>::quiet_NaN();
    return eval;
  }

  double rss = 0.0;
  double trH = 0.0;
  double cvSse = 0.0;
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) {
    w = weights.row(i);
    const LocalFit fit = gwr_fit_at_site(data.X, data.y, w, i, condThreshold);
    if (fit.singular) eval.singularSites.push_back(i);
    const double fitted = data.X.row(i).dot(fit.beta);
    const double resid = data.y[i] - fitted;
    rss += resid * resid;
    trH += fit.leverage;
    if (wantSurfaces) {
      eval.B.row(i) = fit.beta;
      eval.fitted[i] = fitted;
    }
    if (criterion == CalibrationCriterion::LoocvMse) {
      w[i] = 0.0;
      const LocalFit cvFit = gwr_fit_at_site(data.X, data.y, w, i, condThreshold);
      const double pred = data.X.row(i).dot(cvFit.beta);
      cvSse += (data.y[i] - pred) * (data.y[i] - pred);
    }
  }
  eval.rss = rss;
  eval.trH = trH;
  eval.criterion = criterion == CalibrationCriterion::Aicc
                       ? gwr_aicc(rss, trH, n)
                       : cvSse / static_cast<double>(n);
  return eval;
}

CalibrationResult calibrate_bandwidth(const MatrixXd& dist, Index k, KernelMode mode,
                                      const std::function<double(double)>& objective,
                                      double goldenRelTol) {
  const Index n = dist.rows();
  if (mode == KernelMode::AdaptiveNeighbor) {
    if (k + 2 > n) throw FitError("calibration search range empty: N < K+2");
    const IntMinResult best = exhaustive_int_min(
        k + 2, n, [&](Index j) { return objective(static_cast<double>(j)); });
    return {static_cast<double>(best.arg), best.value};
  }

  double dMinPos = std::numeric_limits<double>::infinity();
  double dMax = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (d > 0.0) dMinPos = std::min(dMinPos, d);
      dMax = std::max(dMax, d);
    }
  if (!std::isfinite(dMinPos) || dMax <= 0.0)
    throw FitError("calibration search range empty: no positive distances");
  const ScalarMinResult best =
      golden_section_log_min(dMinPos / 2.0, 2.0 * dMax, goldenRelTol, objective);
  return {best.arg, best.value};
}

SvcFit gwr_fit(const SpatialDataset& data, const KernelSpec& spec,
               CalibrationCriterion criterion) {
  const MatrixXd dist = distance_matrix(data.coords);
  MatrixXd sortedNN;
  if (spec.mode == KernelMode::AdaptiveNeighbor) sortedNN = sorted_neighbor_distances(dist);
  return gwr_fit(data, spec, criterion, dist, sortedNN);
}

SvcFit gwr_fit(const SpatialDataset& data, const KernelSpec& spec, CalibrationCriterion criterion,
               const MatrixXd& dist, const MatrixXd& sortedNeighborDist) {
  const Index n = data.n();
  const Index k = data.k();
  spec.validate(n, k);
  if (spec.bandwidths.size() > 1)
    throw ConfigError("single-bandwidth fit got a per-coefficient bandwidth vector");

  auto weightsFor = [&](double b) {
    return spec.mode == KernelMode::FixedDistance
               ? kernel_weights_fixed(dist, b)
               : kernel_weights_adaptive(dist, sortedNeighborDist, static_cast<Index>(b));
  };

  double bandwidth;
  if (spec.wantsCalibration()) {
    if (n <= k + 3) throw FitError("calibration needs N > K + 3");
    const auto objective = [&](double b) {
      return evaluate_gwr(data, weightsFor(b), criterion, false).criterion;
    };
    bandwidth = calibrate_bandwidth(dist, k, spec.mode, objective).bandwidth;
  } else {
    bandwidth = spec.bandwidths[0];
  }

  // Final pass always computes the hat-matrix trace for pStar.
  GwrEvaluation eval = evaluate_gwr(data, weightsFor(bandwidth),
                                    CalibrationCriterion::Aicc, true);
  if (eval.singularSites.size() == static_cast<size_t>(n))
    throw FitError("all local systems singular");

  SvcFit fit;
  fit.model = spec.mode == KernelMode::FixedDistance ? ModelTag::Gwr : ModelTag::Gwra;
  fit.B = std::move(eval.B);
  fit.fitted = std::move(eval.fitted);
  fit.residuals = data.y - fit.fitted;
  fit.pStar = eval.trH;
  fit.singularSites = std::move(eval.singularSites);
  fit.scale.bandwidths = VectorXd::Constant(1, bandwidth);
  fit.scale.sigma2 = eval.rss / static_cast<double>(n);
  return fit;
}

}  // namespace svcscale
