#pragma once

#include "svcscale/eigenbasis.hpp"
#include "svcscale/types.hpp"

namespace svcscale {

struct ReEsfParams {
  VectorXd alpha;       // per-coefficient scale, > 0
  VectorXd sigmaGamma;  // per-coefficient shrinkage, >= 0

  void validate(Index k) const;
};

// Rescaled spectrum (sum(lambda)/sum(lambda^alpha)) * lambda^alpha; the sum
// is preserved for every alpha.
VectorXd scale_spectrum(const VectorXd& lambda, double alpha);

// Cross-product cache for the mixed-effects solve. After construction every
// likelihood evaluation costs O((K + K*L)^3), independent of N.
class ReEsfSystem {
 public:
  ReEsfSystem(const SpatialDataset& data, const EigenBasis& basis);

  // Block-diagonal square-root prior scale: block k is
  // sigmaGamma_k * Lambda(alpha_k)^{1/2}, stored as a diagonal.
  VectorXd lambda_tilde_diag(const ReEsfParams& p) const;

  Index n() const { return n_; }
  Index k() const { return k_; }
  Index l() const { return l_; }

  const MatrixXd& etilde() const { return etilde_; }
  const MatrixXd& xtx() const { return xtx_; }
  const MatrixXd& xte() const { return xte_; }
  const MatrixXd& ete() const { return ete_; }
  const MatrixXd& schurGram() const { return schurGram_; }  // E~'E~ - E~'X (X'X)^-1 X'E~
  const VectorXd& xty() const { return xty_; }
  const VectorXd& ety() const { return ety_; }
  const VectorXd& schurRhs() const { return schurRhs_; }
  double yty() const { return yty_; }
  double logDetXtX() const { return logDetXtX_; }
  const VectorXd& lambda() const { return lambda_; }
  const MatrixXd& basisE() const { return basisE_; }

  VectorXd solve_xtx(const VectorXd& rhs) const { return xtxSolver_.solve(rhs); }

 private:
  Index n_ = 0, k_ = 0, l_ = 0;
  MatrixXd etilde_, xtx_, xte_, ete_, schurGram_, basisE_;
  VectorXd xty_, ety_, schurRhs_, lambda_;
  double yty_ = 0.0, logDetXtX_ = 0.0;
  Eigen::LDLT<MatrixXd> xtxSolver_;
};

struct ReEsfSolve {
  VectorXd beta;  // K
  VectorXd u;     // K*L
};

// Literal bordered solve of the best-linear-unbiased system.
ReEsfSolve reesf_solve(const ReEsfSystem& system, const ReEsfParams& params);

// Type II restricted log-likelihood evaluated from the cached
// cross-products. Throws FitError when the bordered matrix is not positive
// definite.
double restricted_loglik(const ReEsfSystem& system, const ReEsfParams& params);

// Effective number of parameters tr[H] at the given parameters.
double reesf_pstar(const ReEsfSystem& system, const ReEsfParams& params);

struct ReEsfFitDetail {
  ReEsfParams params;
  double sigma2 = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Maximizes the restricted likelihood over (log alpha_k, log sigmaGamma_k)
// with a bounded simplex search, then recovers the coefficient surfaces.
SvcFit reesf_fit(const SpatialDataset& data, const EigenBasis& basis);
SvcFit reesf_fit(const SpatialDataset& data, const EigenBasis& basis, ReEsfFitDetail& detail);
SvcFit reesf_fit(const ReEsfSystem& system, const SpatialDataset& data, ReEsfFitDetail& detail);

}  // namespace svcscale
