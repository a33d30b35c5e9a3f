#include "txncat/adam.hpp"

#include <cmath>

#include "txncat/error.hpp"

namespace txncat {

void AdamState::step(std::span<Matrix* const> params,
                     std::span<const Matrix* const> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) +
                     " parameters vs " + std::to_string(grads.size()) +
                     " gradients");
  }
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("adam_step: parameter count changed across steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& param = *params[p];
    const Matrix& grad = *grads[p];
    if (!param.same_shape(grad) || !param.same_shape(m_[p])) {
      throw ShapeError("adam_step: shapes disagree (param " + param.shape_str() +
                       " vs grad " + grad.shape_str() + ")");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad.at(i);
      m_[p].at(i) = config_.beta1 * m_[p].at(i) + (1.0 - config_.beta1) * g;
      v_[p].at(i) = config_.beta2 * v_[p].at(i) + (1.0 - config_.beta2) * g * g;
      const double m_hat = m_[p].at(i) / bc1;
      const double v_hat = v_[p].at(i) / bc2;
      param.at(i) -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace txncat
