#include "svcscale/optim.hpp"

#include "svcscale/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace svcscale {

namespace {
constexpr double kGoldenRatio = 0.6180339887498949;  // (sqrt(5)-1)/2
}

ScalarMinResult golden_section_log_min(double lo, double hi, double relTol,
                                       const std::function<double(double)>& f) {
  if (!(lo > 0.0) || !(hi > lo)) throw FitError("invalid golden-section bracket");
  double a = std::log(lo), b = std::log(hi);
  bool anyFinite = false;
  ScalarMinResult best{0.0, std::numeric_limits<double>::infinity()};
  auto eval = [&](double logx) {
    const double x = std::exp(logx);
    const double v = f(x);
    if (std::isfinite(v)) {
      anyFinite = true;
      if (v < best.value) best = {x, v};
    }
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  // Endpoints participate so a monotone profile resolves to the boundary.
  eval(a);
  eval(b);
  double x1 = b - kGoldenRatio * (b - a);
  double x2 = a + kGoldenRatio * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  while (b - a > relTol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGoldenRatio * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGoldenRatio * (b - a);
      f2 = eval(x2);
    }
  }
  if (!anyFinite) throw FitError("criterion non-finite over the whole search range");
  return best;
}

IntMinResult exhaustive_int_min(Eigen::Index lo, Eigen::Index hi,
                                const std::function<double(Eigen::Index)>& f) {
  if (hi < lo) throw FitError("empty integer search range");
  IntMinResult best{lo, std::numeric_limits<double>::infinity()};
  bool anyFinite = false;
  for (Eigen::Index j = lo; j <= hi; ++j) {
    const double v = f(j);
    if (!std::isfinite(v)) continue;
    anyFinite = true;
    if (v < best.value) best = {j, v};
  }
  if (!anyFinite) throw FitError("criterion non-finite over the whole search range");
  return best;
}

NelderMeadResult nelder_mead_box(const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper,
                                 const std::function<double(const Eigen::VectorXd&)>& f,
                                 const NelderMeadOptions& options) {
  const Eigen::Index dim = start.size();
  if (lower.size() != dim || upper.size() != dim) throw FitError("bound size mismatch");

  auto clamp = [&](Eigen::VectorXd x) {
    for (Eigen::Index i = 0; i < dim; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  };
  auto safeEval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.reserve(static_cast<size_t>(dim) + 1);
  pts.push_back(clamp(start));
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd p = pts[0];
    p[i] += (p[i] + options.initialStep <= upper[i]) ? options.initialStep : -options.initialStep;
    pts.push_back(clamp(p));
  }
  for (const auto& p : pts) vals.push_back(safeEval(p));

  std::vector<size_t> ord(pts.size());
  auto sortSimplex = [&] {
    for (size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::stable_sort(ord.begin(), ord.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
  };

  const double reflect = 1.0, expand = 2.0, contract = 0.5, shrink = 0.5;
  NelderMeadResult result;
  int iter = 0;
  for (; iter < options.maxIterations; ++iter) {
    sortSimplex();
    const double spread = vals[ord.back()] - vals[ord.front()];
    if (std::isfinite(vals[ord.front()]) && spread < options.spreadTol) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (size_t i = 0; i + 1 < ord.size(); ++i) centroid += pts[ord[i]];
    centroid /= static_cast<double>(dim);

    const size_t worst = ord.back();
    const Eigen::VectorXd xr = clamp(centroid + reflect * (centroid - pts[worst]));
    const double fr = safeEval(xr);

    if (fr < vals[ord.front()]) {
      const Eigen::VectorXd xe = clamp(centroid + expand * (centroid - pts[worst]));
      const double fe = safeEval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[ord[ord.size() - 2]]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      const Eigen::VectorXd base = outside ? xr : pts[worst];
      const Eigen::VectorXd xc = clamp(centroid + contract * (base - centroid));
      const double fc = safeEval(xc);
      if (fc < std::min(fr, vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        const Eigen::VectorXd& bestPt = pts[ord.front()];
        for (size_t i = 1; i < ord.size(); ++i) {
          pts[ord[i]] = clamp(bestPt + shrink * (pts[ord[i]] - bestPt));
          vals[ord[i]] = safeEval(pts[ord[i]]);
        }
      }
    }
  }
  sortSimplex();
  result.x = pts[ord.front()];
  result.value = vals[ord.front()];
  result.iterations = iter;
  return result;
}

}  // namespace svcscale
