#include "svcscale/complexity.hpp"

#include "svcscale/gwr.hpp"
#include "svcscale/spatial.hpp"

#include <cmath>
#include <memory>

namespace svcscale {

namespace {

ComplexityResult gwr_trace(const SpatialDataset& data, const MatrixXd& weights) {
  ComplexityResult out;
  VectorXd w(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    w = weights.row(i);
    const LocalFit fit = gwr_fit_at_site(data.X, data.y, w, i);
    out.pStar += fit.leverage;
    if (fit.singular) ++out.singularCount;
  }
  return out;
}

}  // namespace

std::vector<std::pair<Index, Index>> forced_esf_terms(Index k, Index l, double ratio) {
  if (ratio < 0.0 || ratio > 1.0) throw ConfigError("selection ratio must lie in [0,1]");
  const Index total = k * l;
  const Index count = static_cast<Index>(std::ceil(ratio * static_cast<double>(total)));
  std::vector<std::pair<Index, Index>> terms;
  terms.reserve(static_cast<size_t>(count));
  // Eigenvalues are stored descending, so rank order is l ascending with
  // predictor index breaking the ties within each eigenvector.
  for (Index ll = 0; ll < l && static_cast<Index>(terms.size()) < count; ++ll)
    for (Index kk = 0; kk < k && static_cast<Index>(terms.size()) < count; ++kk)
      terms.emplace_back(kk, ll);
  return terms;
}

ComplexityResult effective_parameters(const SpatialDataset& data, const EigenBasis* basis,
                                      const ComplexitySpec& spec) {
  const MatrixXd dist = distance_matrix(data.coords);
  MatrixXd sortedNN;
  if (std::holds_alternative<GwraComplexity>(spec)) sortedNN = sorted_neighbor_distances(dist);
  const ReEsfSystem* system = nullptr;
  std::unique_ptr<ReEsfSystem> owned;
  if (std::holds_alternative<ReEsfComplexity>(spec)) {
    if (!basis) throw ConfigError("mixed-model complexity needs an eigenbasis");
    owned = std::make_unique<ReEsfSystem>(data, *basis);
    system = owned.get();
  }
  return effective_parameters(data, dist, sortedNN, basis, system, spec);
}

ComplexityResult effective_parameters(const SpatialDataset& data, const MatrixXd& dist,
                                      const MatrixXd& sortedNeighborDist, const EigenBasis* basis,
                                      const ReEsfSystem* reesfSystem, const ComplexitySpec& spec) {
  const Index n = data.n();
  const Index k = data.k();

  if (const auto* g = std::get_if<GwrComplexity>(&spec)) {
    if (!(g->bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    return gwr_trace(data, kernel_weights_fixed(dist, g->bandwidth));
  }

  if (const auto* g = std::get_if<GwraComplexity>(&spec)) {
    if (!(g->neighborFraction > 0.0) || g->neighborFraction > 1.0)
      throw ConfigError("neighbor fraction must lie in (0,1]");
    const Index j = std::min<Index>(
        n, std::max<Index>(k + 2, static_cast<Index>(
                                      std::llround(g->neighborFraction * static_cast<double>(n)))));
    return gwr_trace(data, kernel_weights_adaptive(dist, sortedNeighborDist, j));
  }

  if (const auto* e = std::get_if<EsfComplexity>(&spec)) {
    if (!basis) throw ConfigError("spatial-filter complexity needs an eigenbasis");
    const auto terms = forced_esf_terms(k, basis->l(), e->selectionRatio);
    MatrixXd design(n, k + static_cast<Index>(terms.size()));
    design.leftCols(k) = data.X;
    for (size_t t = 0; t < terms.size(); ++t)
      design.col(k + static_cast<Index>(t)) =
          data.X.col(terms[t].first).cwiseProduct(basis->E.col(terms[t].second));
    // Projection trace equals rank; rank-revealing QR keeps the count
    // honest if a degenerate design ever slips in.
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    ComplexityResult out;
    out.pStar = static_cast<double>(qr.rank());
    return out;
  }

  const auto& r = std::get<ReEsfComplexity>(spec);
  if (!reesfSystem) throw ConfigError("mixed-model complexity needs a cross-product cache");
  ReEsfParams params;
  params.alpha = r.alpha;
  params.sigmaGamma = r.sigma;
  ComplexityResult out;
  out.pStar = reesf_pstar(*reesfSystem, params);
  return out;
}

}  // namespace svcscale
