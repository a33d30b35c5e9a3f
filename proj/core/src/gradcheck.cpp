#include "txncat/gradcheck.hpp"

#include <cmath>

#include "txncat/error.hpp"

namespace txncat {

double grad_check(const ScalarFn& f, const GradFn& analytic_grad,
                  std::vector<Matrix> params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) {
    throw ConfigError("grad_check: eps " + std::to_string(eps) +
                      " outside [1e-7, 1e-4]");
  }
  const std::vector<Matrix> analytic = analytic_grad(params);
  if (analytic.size() != params.size()) {
    throw ShapeError("grad_check: got " + std::to_string(analytic.size()) +
                     " gradients for " + std::to_string(params.size()) +
                     " parameters");
  }
  const auto eval = [&]() {
    const double v = f(params);
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite f value");
    return v;
  };
  double max_err = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!analytic[p].same_shape(params[p])) {
      throw ShapeError("grad_check: gradient shape " + analytic[p].shape_str() +
                       " does not match parameter " + params[p].shape_str());
    }
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p].at(i);
      params[p].at(i) = saved + eps;
      const double f_plus = eval();
      params[p].at(i) = saved - eps;
      const double f_minus = eval();
      params[p].at(i) = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[p].at(i);
      const double err =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace txncat
