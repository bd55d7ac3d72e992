#pragma once

#include <Eigen/Dense>

#include <functional>

namespace svcscale {

struct ScalarMinResult {
  double arg = 0.0;
  double value = 0.0;
};

// Golden-section search on log(x) over [lo, hi]; stops when the bracket's
// log-width falls below relTol (a relative tolerance on x). The objective
// may return +inf for inadmissible candidates; throws FitError when every
// probed value is non-finite.
ScalarMinResult golden_section_log_min(double lo, double hi, double relTol,
                                       const std::function<double(double)>& f);

struct IntMinResult {
  Eigen::Index arg = 0;
  double value = 0.0;
};

// Exhaustive search over the integers [lo, hi]; ties keep the smaller
// argument. Throws FitError when the range is empty or every value is
// non-finite.
IntMinResult exhaustive_int_min(Eigen::Index lo, Eigen::Index hi,
                                const std::function<double(Eigen::Index)>& f);

struct NelderMeadOptions {
  double initialStep = 0.7;
  double spreadTol = 1e-6;  // max-min objective spread over the simplex
  int maxIterations = 2000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Derivative-free simplex minimization with box constraints enforced by
// projection. Fully deterministic.
NelderMeadResult nelder_mead_box(const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper,
                                 const std::function<double(const Eigen::VectorXd&)>& f,
                                 const NelderMeadOptions& options = {});

}  // namespace svcscale
