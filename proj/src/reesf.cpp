#include "svcscale/reesf.hpp"

#include "svcscale/optim.hpp"

#include <cmath>
#include <limits>

namespace svcscale {

namespace {
constexpr double kLogAlphaMin = -5.0;
constexpr double kLogAlphaMax = 5.0;
constexpr double kQuadFloor = 1e-300;
}

void ReEsfParams::validate(Index k) const {
  if (alpha.size() != k || sigmaGamma.size() != k)
    throw ConfigError("parameter vectors must have length K");
  for (Index i = 0; i < k; ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] <= 0.0)
      throw ConfigError("alpha must be finite and positive");
    if (!std::isfinite(sigmaGamma[i]) || sigmaGamma[i] < 0.0)
      throw ConfigError("sigmaGamma must be finite and nonnegative");
  }
}

VectorXd scale_spectrum(const VectorXd& lambda, double alpha) {
  // alpha = 0 is the flat limit (every entry sum(lambda)/L); negative
  // exponents are rejected.
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw ConfigError("spectrum scale parameter must be finite and nonnegative");
  if ((lambda.array() <= 0.0).any()) throw DataError("spectrum must be strictly positive");
  const VectorXd powered = lambda.array().pow(alpha);
  const double prefactor = lambda.sum() / powered.sum();
  return prefactor * powered;
}

ReEsfSystem::ReEsfSystem(const SpatialDataset& data, const EigenBasis& basis) {
  if (basis.E.rows() != data.n()) throw DataError("eigenbasis built on a different dataset");
  if (basis.l() < 1) throw FitError("empty eigenbasis");
  n_ = data.n();
  k_ = data.k();
  l_ = basis.l();
  lambda_ = basis.lambda;
  basisE_ = basis.E;

  etilde_.resize(n_, k_ * l_);
  for (Index kk = 0; kk < k_; ++kk)
    etilde_.middleCols(kk * l_, l_) = basis.E.array().colwise() * data.X.col(kk).array();

  xtx_.noalias() = data.X.transpose() * data.X;
  xte_.noalias() = data.X.transpose() * etilde_;
  ete_.noalias() = etilde_.transpose() * etilde_;
  xty_.noalias() = data.X.transpose() * data.y;
  ety_.noalias() = etilde_.transpose() * data.y;
  yty_ = data.y.squaredNorm();

  xtxSolver_.compute(xtx_);
  if (xtxSolver_.info() != Eigen::Success) throw FitError("X'X factorization failed");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(xtx_);
  if (es.eigenvalues().minCoeff() <= 0.0) throw FitError("X'X is singular");
  logDetXtX_ = es.eigenvalues().array().log().sum();

  // Projected-out-fixed-effects Gram and right-hand side.
  const MatrixXd xtxInvXte = xtxSolver_.solve(xte_);
  schurGram_ = ete_ - xte_.transpose() * xtxInvXte;
  schurRhs_ = ety_ - xte_.transpose() * xtxSolver_.solve(xty_);
}

VectorXd ReEsfSystem::lambda_tilde_diag(const ReEsfParams& p) const {
  p.validate(k_);
  VectorXd diag(k_ * l_);
  for (Index kk = 0; kk < k_; ++kk) {
    const VectorXd scaled = scale_spectrum(lambda_, p.alpha[kk]);
    diag.segment(kk * l_, l_) = p.sigmaGamma[kk] * scaled.array().sqrt();
  }
  return diag;
}

ReEsfSolve reesf_solve(const ReEsfSystem& system, const ReEsfParams& params) {
  const Index k = system.k();
  const Index m = system.k() * system.l();
  const VectorXd ld = system.lambda_tilde_diag(params);

  MatrixXd bordered(k + m, k + m);
  bordered.topLeftCorner(k, k) = system.xtx();
  bordered.topRightCorner(k, m) = system.xte() * ld.asDiagonal();
  bordered.bottomLeftCorner(m, k) = bordered.topRightCorner(k, m).transpose();
  bordered.bottomRightCorner(m, m) = ld.asDiagonal() * system.ete() * ld.asDiagonal();
  bordered.bottomRightCorner(m, m).diagonal().array() += 1.0;

  VectorXd rhs(k + m);
  rhs.head(k) = system.xty();
  rhs.tail(m) = ld.cwiseProduct(system.ety());

  Eigen::LDLT<MatrixXd> solver(bordered);
  if (solver.info() != Eigen::Success) throw FitError("bordered system factorization failed");
  const VectorXd sol = solver.solve(rhs);

  ReEsfSolve out;
  out.beta = sol.head(k);
  out.u = sol.tail(m);
  return out;
}

namespace {

struct ReducedSolve {
  VectorXd u;        // K*L
  VectorXd beta;     // K
  double logDetW = 0.0;
  double quad = 0.0;  // residual'residual + u'u
};

// Schur-reduced evaluation: W = I + Ld * schurGram * Ld is the Schur
// complement of X'X in the bordered matrix, so |P| = |X'X| |W| and one
// Cholesky factors both the solve and the log-determinant.
ReducedSolve reduced_solve(const ReEsfSystem& sys, const VectorXd& ld) {
  MatrixXd w = sys.schurGram();
  w.array() *= (ld * ld.transpose()).array();
  w.diagonal().array() += 1.0;

  Eigen::LLT<MatrixXd> llt(w);
  if (llt.info() != Eigen::Success)
    throw FitError("bordered matrix is not positive definite");

  ReducedSolve r;
  r.logDetW = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  r.u = llt.solve(ld.cwiseProduct(sys.schurRhs()));
  const VectorXd lu = ld.cwiseProduct(r.u);
  r.beta = sys.solve_xtx(sys.xty() - sys.xte() * lu);

  const double eps2 = sys.yty() - 2.0 * r.beta.dot(sys.xty()) - 2.0 * lu.dot(sys.ety()) +
                      2.0 * r.beta.dot(sys.xte() * lu) + r.beta.dot(sys.xtx() * r.beta) +
                      lu.dot(sys.ete() * lu);
  r.quad = std::max(eps2, 0.0) + r.u.squaredNorm();
  return r;
}

}  // namespace

double restricted_loglik(const ReEsfSystem& system, const ReEsfParams& params) {
  const VectorXd ld = system.lambda_tilde_diag(params);
  const ReducedSolve r = reduced_solve(system, ld);
  const double nk = static_cast<double>(system.n() - system.k());
  const double quad = std::max(r.quad, kQuadFloor);
  return -0.5 * (system.logDetXtX() + r.logDetW) -
         0.5 * nk * (1.0 + std::log(2.0 * M_PI / nk * quad));
}

double reesf_pstar(const ReEsfSystem& system, const ReEsfParams& params) {
  const VectorXd ld = system.lambda_tilde_diag(params);
  const Index m = ld.size();
  MatrixXd w = system.schurGram();
  w.array() *= (ld * ld.transpose()).array();
  w.diagonal().array() += 1.0;
  Eigen::LLT<MatrixXd> llt(w);
  if (llt.info() != Eigen::Success)
    throw FitError("bordered matrix is not positive definite");
  // tr[H] = K + KL - tr(W^{-1}): the lower-right block of the bordered
  // inverse is W^{-1} and H differs from P P^{-1} only by that identity
  // block.
  const MatrixXd winv = llt.solve(MatrixXd::Identity(m, m));
  return static_cast<double>(system.k() + m) - winv.trace();
}

SvcFit reesf_fit(const SpatialDataset& data, const EigenBasis& basis) {
  ReEsfFitDetail detail;
  return reesf_fit(data, basis, detail);
}

SvcFit reesf_fit(const SpatialDataset& data, const EigenBasis& basis, ReEsfFitDetail& detail) {
  const ReEsfSystem system(data, basis);
  return reesf_fit(system, data, detail);
}

SvcFit reesf_fit(const ReEsfSystem& system, const SpatialDataset& data, ReEsfFitDetail& detail) {
  const Index k = system.k();
  const Index l = system.l();

  const double sdY = std::sqrt((data.y.array() - data.y.mean()).square().sum() /
                               std::max<Index>(data.n() - 1, 1));
  const double sigmaInit = 0.1 * (sdY > 0.0 ? sdY : 1.0);
  const double logSigmaMin = std::log(1e-10 * (sdY > 0.0 ? sdY : 1.0));
  const double logSigmaMax = std::log(1e4 * (sdY > 0.0 ? sdY : 1.0));

  VectorXd start(2 * k), lower(2 * k), upper(2 * k);
  for (Index i = 0; i < k; ++i) {
    start[i] = 0.0;  // alpha = 1
    lower[i] = kLogAlphaMin;
    upper[i] = kLogAlphaMax;
    start[k + i] = std::log(sigmaInit);
    lower[k + i] = logSigmaMin;
    upper[k + i] = logSigmaMax;
  }

  auto unpack = [&](const VectorXd& x) {
    ReEsfParams p;
    p.alpha = x.head(k).array().exp();
    p.sigmaGamma = x.tail(k).array().exp();
    return p;
  };
  const auto objective = [&](const VectorXd& x) {
    try {
      return -restricted_loglik(system, unpack(x));
    } catch (const FitError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const NelderMeadResult opt = nelder_mead_box(start, lower, upper, objective);

  detail.params = unpack(opt.x);
  detail.converged = opt.converged;
  detail.iterations = opt.iterations;
  detail.loglik = -opt.value;

  const VectorXd ld = system.lambda_tilde_diag(detail.params);
  const ReEsfSolve sol = reesf_solve(system, detail.params);
  const VectorXd lu = ld.cwiseProduct(sol.u);
  detail.sigma2 = std::max(
      (data.y - data.X * sol.beta - system.etilde() * lu).squaredNorm() + sol.u.squaredNorm(),
      0.0) / static_cast<double>(system.n() - k);

  SvcFit fit;
  fit.model = ModelTag::ReEsf;
  fit.B.resize(data.n(), k);
  for (Index kk = 0; kk < k; ++kk) {
    const VectorXd gammaK = lu.segment(kk * l, l);
    fit.B.col(kk) = VectorXd::Constant(data.n(), sol.beta[kk]) + system.basisE() * gammaK;
  }
  fit.fitted = data.X * sol.beta + system.etilde() * lu;
  fit.residuals = data.y - fit.fitted;
  fit.pStar = reesf_pstar(system, detail.params);
  fit.converged = opt.converged;
  fit.scale.alpha = detail.params.alpha;
  fit.scale.sigmaGamma = detail.params.sigmaGamma;
  fit.scale.sigma2 = detail.sigma2;
  return fit;
}

}  // namespace svcscale
