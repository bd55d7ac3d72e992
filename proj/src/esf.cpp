#include "svcscale/esf.hpp"

#include <cmath>
#include <limits>

namespace svcscale {

namespace {

constexpr double kCondLimit = 1e12;

double adjusted_r2(double rss, double tss, Index n, Index p) {
  if (n - p < 1) return -std::numeric_limits<double>::infinity();
  return 1.0 - (rss / static_cast<double>(n - p)) / (tss / static_cast<double>(n - 1));
}

struct TrialFit {
  bool admissible = false;
  double rss = 0.0;
  VectorXd coef;
};

// OLS of y on the bordered design via its singular value decomposition,
// which gives the definitive rank and condition number for the admission
// rule; inadmissible when rank is lost or the condition crosses the limit.
TrialFit try_design(const MatrixXd& design, const VectorXd& y) {
  TrialFit t;
  Eigen::BDCSVD<MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double svMin = sv[sv.size() - 1];
  if (!(svMin > 0.0) || sv[0] / svMin >= kCondLimit) return t;
  t.coef = svd.solve(y);
  t.rss = (y - design * t.coef).squaredNorm();
  t.admissible = std::isfinite(t.rss);
  return t;
}

}  // namespace

MatrixXd build_candidates(const SpatialDataset& data, const EigenBasis& basis) {
  if (basis.E.rows() != data.n()) throw DataError("eigenbasis built on a different dataset");
  const Index n = data.n();
  const Index k = data.k();
  const Index l = basis.l();
  MatrixXd cand(n, k + k * l);
  cand.leftCols(k) = data.X;
  for (Index kk = 0; kk < k; ++kk)
    for (Index ll = 0; ll < l; ++ll)
      cand.col(k + kk * l + ll) = data.X.col(kk).cwiseProduct(basis.E.col(ll));
  return cand;
}

EsfSelection esf_select(const SpatialDataset& data, const EigenBasis& basis) {
  const Index n = data.n();
  const Index k = data.k();
  const Index l = basis.l();
  const MatrixXd cand = build_candidates(data, basis);
  const Index terms = k * l;
  if (cand.cols() == 0) throw FitError("empty candidate design");

  const double tss = (data.y.array() - data.y.mean()).square().sum();
  if (tss <= 0.0) throw DataError("constant response");

  std::vector<bool> eligible(static_cast<size_t>(terms), true);
  for (Index c = 0; c < terms; ++c)
    if (cand.col(k + c).squaredNorm() == 0.0) eligible[static_cast<size_t>(c)] = false;

  MatrixXd design = data.X;
  const TrialFit base = try_design(design, data.y);
  if (!base.admissible) throw FitError("predictor matrix is rank deficient");

  EsfSelection sel;
  double bestR2 = adjusted_r2(base.rss, tss, n, k);
  std::vector<Index> chosen;

  while (true) {
    Index bestTerm = -1;
    double bestTermR2 = bestR2;
    const Index p = design.cols();
    if (p + 1 >= n) break;  // no residual degrees of freedom left
    MatrixXd trial(n, p + 1);
    trial.leftCols(p) = design;
    for (Index c = 0; c < terms; ++c) {
      if (!eligible[static_cast<size_t>(c)]) continue;
      trial.col(p) = cand.col(k + c);
      const TrialFit fit = try_design(trial, data.y);
      if (!fit.admissible) {
        // Rank loss is permanent: a superset design cannot recover it.
        eligible[static_cast<size_t>(c)] = false;
        continue;
      }
      const double r2 = adjusted_r2(fit.rss, tss, n, p + 1);
      if (r2 > bestTermR2) {
        bestTermR2 = r2;
        bestTerm = c;
      }
    }
    if (bestTerm < 0) break;  // no candidate strictly improves adjusted R^2

    design.conservativeResize(Eigen::NoChange, p + 1);
    design.col(p) = cand.col(k + bestTerm);
    eligible[static_cast<size_t>(bestTerm)] = false;
    chosen.push_back(bestTerm);
    bestR2 = bestTermR2;
    sel.adjustedR2Path.push_back(bestR2);
  }

  // Final coefficients on the selected design.
  const TrialFit finalFit = try_design(design, data.y);
  if (!finalFit.admissible) throw FitError("selected design became inadmissible");
  const VectorXd& coef = finalFit.coef;
  sel.betaGlobal = coef.head(k);
  sel.gamma = coef.tail(static_cast<Index>(chosen.size()));
  sel.adjustedR2 = bestR2;
  sel.selected.reserve(chosen.size());
  for (const Index c : chosen) sel.selected.emplace_back(c / l, c % l);
  return sel;
}

SvcFit esf_fit(const SpatialDataset& data, const EigenBasis& basis) {
  EsfSelection sel;
  return esf_fit(data, basis, sel);
}

SvcFit esf_fit(const SpatialDataset& data, const EigenBasis& basis, EsfSelection& selectionOut) {
  selectionOut = esf_select(data, basis);
  const Index n = data.n();
  const Index k = data.k();

  SvcFit fit;
  fit.model = ModelTag::Esf;
  fit.B.resize(n, k);
  for (Index kk = 0; kk < k; ++kk) fit.B.col(kk).setConstant(selectionOut.betaGlobal[kk]);
  for (size_t t = 0; t < selectionOut.selected.size(); ++t) {
    const auto [kk, ll] = selectionOut.selected[t];
    fit.B.col(kk) += basis.E.col(ll) * selectionOut.gamma[static_cast<Index>(t)];
  }
  fit.fitted = VectorXd::Zero(n);
  for (Index kk = 0; kk < k; ++kk)
    fit.fitted += data.X.col(kk).cwiseProduct(fit.B.col(kk));
  fit.residuals = data.y - fit.fitted;
  // Idempotent projection: trace equals the selected column count.
  fit.pStar = static_cast<double>(k + static_cast<Index>(selectionOut.selected.size()));
  fit.scale.esfTerms = selectionOut.selected;
  fit.scale.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(n);
  return fit;
}

}  // namespace svcscale
