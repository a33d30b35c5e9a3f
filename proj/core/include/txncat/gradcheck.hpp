#pragma once

#include <functional>
#include <vector>

#include "txncat/matrix.hpp"

namespace txncat {

using ScalarFn = std::function<double(const std::vector<Matrix>&)>;
using GradFn = std::function<std::vector<Matrix>(const std::vector<Matrix>&)>;

/// Compares analytic gradients against central finite differences:
///   numeric = (f(p + eps) - f(p - eps)) / (2 eps)   per coordinate
///   error   = |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
/// and returns the maximum error over all coordinates of all parameters.
///
/// The finite-difference side evaluates f alone, independent of whatever
/// machinery produced the analytic gradients. eps must lie in [1e-7, 1e-4].
double grad_check(const ScalarFn& f, const GradFn& analytic_grad,
                  std::vector<Matrix> params, double eps);

}  // namespace txncat
