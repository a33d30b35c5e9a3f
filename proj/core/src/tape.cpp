#include "txncat/tape.hpp"

#include <cmath>
#include <numeric>

#include "txncat/error.hpp"

namespace txncat {

ValueId Tape::push(Matrix value, bool tracked, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.tracked = recording_ && tracked;
  if (node.tracked) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return ValueId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

ValueId Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

ValueId Tape::param(Matrix value) { return push(std::move(value), true, {}); }

void Tape::accumulate(ValueId id, const Matrix& delta) {
  if (!nodes_[id.index].tracked) return;
  Matrix& buf = grad_buf(id);
  for (std::size_t i = 0; i < buf.size(); ++i) buf.at(i) += delta.at(i);
}

Matrix& Tape::grad_buf(ValueId id) {
  Matrix& buf = grads_[id.index];
  if (buf.empty()) {
    const Matrix& v = nodes_[id.index].value;
    buf = Matrix(v.rows(), v.cols());
  }
  return buf;
}

void Tape::backward(ValueId loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_str());
  }
  if (!recording_) {
    throw Error("backward: tape is not recording");
  }
  grads_.assign(nodes_.size(), Matrix());
  grad_buf(loss)(0, 0) = 1.0;
  for (std::uint32_t i = loss.index + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || grads_[i].empty()) continue;
    node.backward(*this, grads_[i]);
  }
}

const Matrix& Tape::grad(ValueId id) {
  if (grads_.size() != nodes_.size()) {
    throw Error("grad: backward() has not been run");
  }
  return grad_buf(id);
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  Matrix out = txncat::matmul(value(a), value(b));
  return push(std::move(out), tracked(a) || tracked(b),
              [a, b](Tape& t, const Matrix& g) {
                if (t.tracked(a))
                  t.accumulate(a, txncat::matmul(g, txncat::transpose(t.value(b))));
                if (t.tracked(b))
                  t.accumulate(b, txncat::matmul(txncat::transpose(t.value(a)), g));
              });
}

ValueId Tape::add(ValueId a, ValueId b) {
  Matrix out = txncat::add(value(a), value(b));
  return push(std::move(out), tracked(a) || tracked(b),
              [a, b](Tape& t, const Matrix& g) {
                t.accumulate(a, g);
                t.accumulate(b, g);
              });
}

ValueId Tape::add_row_broadcast(ValueId a, ValueId row) {
  Matrix out = txncat::add_row_broadcast(value(a), value(row));
  return push(std::move(out), tracked(a) || tracked(row),
              [a, row](Tape& t, const Matrix& g) {
                t.accumulate(a, g);
                if (!t.tracked(row)) return;
                Matrix rg(1, g.cols());
                for (std::size_t i = 0; i < g.rows(); ++i)
                  for (std::size_t j = 0; j < g.cols(); ++j) rg(0, j) += g(i, j);
                t.accumulate(row, rg);
              });
}

ValueId Tape::scale(ValueId a, double factor) {
  Matrix out = txncat::scale(value(a), factor);
  return push(std::move(out), tracked(a), [a, factor](Tape& t, const Matrix& g) {
    t.accumulate(a, txncat::scale(g, factor));
  });
}

ValueId Tape::transpose(ValueId a) {
  Matrix out = txncat::transpose(value(a));
  return push(std::move(out), tracked(a), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, txncat::transpose(g));
  });
}

ValueId Tape::relu(ValueId a) {
  Matrix out = txncat::elementwise(value(a), Activation::kRelu);
  return push(std::move(out), tracked(a), [a](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(a);
    Matrix dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (x.at(i) <= 0.0) dx.at(i) = 0.0;
    t.accumulate(a, dx);
  });
}

ValueId Tape::sigmoid(ValueId a) {
  Matrix out = txncat::elementwise(value(a), Activation::kSigmoid);
  ValueId id = push(std::move(out), tracked(a), {});
  if (nodes_[id.index].tracked) {
    nodes_[id.index].backward = [a, id](Tape& t, const Matrix& g) {
      const Matrix& s = t.value(id);
      Matrix dx = g;
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx.at(i) *= s.at(i) * (1.0 - s.at(i));
      t.accumulate(a, dx);
    };
  }
  return id;
}

ValueId Tape::softmax_rows(ValueId a) { return softmax_rows(a, {}); }

ValueId Tape::softmax_rows(ValueId a, std::vector<std::uint8_t> valid_cols) {
  Matrix out = txncat::softmax_rows(value(a), valid_cols);
  ValueId id = push(std::move(out), tracked(a), {});
  if (nodes_[id.index].tracked) {
    nodes_[id.index].backward = [a, id](Tape& t, const Matrix& g) {
      // Row-wise: dx = s (.) (g - <g, s>); masked columns have s = 0 and so
      // receive zero gradient automatically.
      const Matrix& s = t.value(id);
      Matrix dx(s.rows(), s.cols());
      for (std::size_t i = 0; i < s.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < s.cols(); ++j) dot += g(i, j) * s(i, j);
        for (std::size_t j = 0; j < s.cols(); ++j)
          dx(i, j) = s(i, j) * (g(i, j) - dot);
      }
      t.accumulate(a, dx);
    };
  }
  return id;
}

ValueId Tape::layer_norm(ValueId x, ValueId gamma, ValueId beta, double eps) {
  Matrix out = txncat::layer_norm(value(x), value(gamma), value(beta), eps);
  bool track = tracked(x) || tracked(gamma) || tracked(beta);
  return push(std::move(out), track, [x, gamma, beta, eps](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    const Matrix& gv = t.value(gamma);
    const std::size_t n = xv.cols();
    Matrix dgamma(1, n), dbeta(1, n), dx(xv.rows(), n);
    std::vector<double> xhat(n);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < n; ++j) mean += xv(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = xv(i, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double inv_std = 1.0 / std::sqrt(var + eps);
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (xv(i, j) - mean) * inv_std;
        const double dxh = g(i, j) * gv(0, j);
        mean_dxhat += dxh;
        mean_dxhat_xhat += dxh * xhat[j];
        dgamma(0, j) += g(i, j) * xhat[j];
        dbeta(0, j) += g(i, j);
      }
      mean_dxhat /= static_cast<double>(n);
      mean_dxhat_xhat /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double dxh = g(i, j) * gv(0, j);
        dx(i, j) = inv_std * (dxh - mean_dxhat - xhat[j] * mean_dxhat_xhat);
      }
    }
    t.accumulate(x, dx);
    t.accumulate(gamma, dgamma);
    t.accumulate(beta, dbeta);
  });
}

ValueId Tape::embedding_rows(ValueId table, std::vector<std::uint32_t> ids) {
  const Matrix& tab = value(table);
  Matrix out(ids.size(), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tab.rows()) {
      throw IndexError("embedding_rows: token id " + std::to_string(ids[i]) +
                       " out of range for table " + tab.shape_str());
    }
    for (std::size_t j = 0; j < tab.cols(); ++j) out(i, j) = tab(ids[i], j);
  }
  return push(std::move(out), tracked(table),
              [table, ids = std::move(ids)](Tape& t, const Matrix& g) {
                Matrix& tg = t.grad_buf(table);
                for (std::size_t i = 0; i < ids.size(); ++i)
                  for (std::size_t j = 0; j < g.cols(); ++j)
                    tg(ids[i], j) += g(i, j);
              });
}

ValueId Tape::slice_cols(ValueId a, std::size_t start, std::size_t len) {
  const Matrix& av = value(a);
  if (start + len > av.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") exceeds " + av.shape_str());
  }
  Matrix out(av.rows(), len);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < len; ++j) out(i, j) = av(i, start + j);
  return push(std::move(out), tracked(a), [a, start, len](Tape& t, const Matrix& g) {
    Matrix& ag = t.grad_buf(a);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < len; ++j) ag(i, start + j) += g(i, j);
  });
}

ValueId Tape::concat_cols(std::span<const ValueId> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool track = false;
  for (ValueId p : parts) {
    if (value(p).rows() != rows) {
      throw ShapeError("concat_cols: row counts disagree (" +
                       value(parts[0]).shape_str() + " vs " +
                       value(p).shape_str() + ")");
    }
    cols += value(p).cols();
    track = track || tracked(p);
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (ValueId p : parts) {
    const Matrix& pv = value(p);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    off += pv.cols();
  }
  std::vector<ValueId> ids(parts.begin(), parts.end());
  return push(std::move(out), track, [ids = std::move(ids)](Tape& t, const Matrix& g) {
    std::size_t off = 0;
    for (ValueId p : ids) {
      const std::size_t w = t.value(p).cols();
      if (t.tracked(p)) {
        Matrix& pg = t.grad_buf(p);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < w; ++j) pg(i, j) += g(i, off + j);
      }
      off += w;
    }
  });
}

ValueId Tape::mean_rows(ValueId a) {
  const Matrix& av = value(a);
  if (av.rows() == 0) throw ShapeError("mean_rows: empty matrix");
  Matrix out(1, av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
  const double inv = 1.0 / static_cast<double>(av.rows());
  for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) *= inv;
  return push(std::move(out), tracked(a), [a, inv](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    Matrix da(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
      for (std::size_t j = 0; j < av.cols(); ++j) da(i, j) = g(0, j) * inv;
    t.accumulate(a, da);
  });
}

ValueId Tape::sum_all(ValueId a) {
  const Matrix& av = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av.at(i);
  Matrix out(1, 1);
  out(0, 0) = s;
  return push(std::move(out), tracked(a), [a](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    Matrix da(av.rows(), av.cols());
    da.fill(g(0, 0));
    t.accumulate(a, da);
  });
}

ValueId Tape::cross_entropy(ValueId probs, std::size_t target) {
  const double loss = txncat::cross_entropy(value(probs), target);
  Matrix out(1, 1);
  out(0, 0) = loss;
  return push(std::move(out), tracked(probs),
              [probs, target](Tape& t, const Matrix& g) {
                const Matrix& p = t.value(probs);
                if (p(0, target) <= kCrossEntropyFloor) return;  // clamped flat
                Matrix dp(1, p.cols());
                dp(0, target) = -g(0, 0) / p(0, target);
                t.accumulate(probs, dp);
              });
}

ValueId Tape::normalize_rows(ValueId a) {
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) sum += av(i, j);
    if (!(sum > 0.0)) {
      throw NumericError("normalize_rows: row " + std::to_string(i) +
                         " has non-positive sum");
    }
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / sum;
  }
  ValueId id = push(std::move(out), tracked(a), {});
  if (nodes_[id.index].tracked) {
    nodes_[id.index].backward = [a, id](Tape& t, const Matrix& g) {
      const Matrix& av = t.value(a);
      const Matrix& y = t.value(id);
      Matrix dx(av.rows(), av.cols());
      for (std::size_t i = 0; i < av.rows(); ++i) {
        double sum = 0.0, dot = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
          sum += av(i, j);
          dot += g(i, j) * y(i, j);
        }
        for (std::size_t j = 0; j < av.cols(); ++j)
          dx(i, j) = (g(i, j) - dot) / sum;
      }
      t.accumulate(a, dx);
    };
  }
  return id;
}

ValueId Tape::mean_scalars(std::span<const ValueId> scalars) {
  if (scalars.empty()) throw ShapeError("mean_scalars: no inputs");
  double s = 0.0;
  bool track = false;
  for (ValueId v : scalars) {
    const Matrix& m = value(v);
    if (m.rows() != 1 || m.cols() != 1) {
      throw ShapeError("mean_scalars: expected 1x1 inputs, got " + m.shape_str());
    }
    s += m(0, 0);
    track = track || tracked(v);
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  Matrix out(1, 1);
  out(0, 0) = s * inv;
  std::vector<ValueId> ids(scalars.begin(), scalars.end());
  return push(std::move(out), track,
              [ids = std::move(ids), inv](Tape& t, const Matrix& g) {
                Matrix d(1, 1);
                d(0, 0) = g(0, 0) * inv;
                for (ValueId v : ids) t.accumulate(v, d);
              });
}

}  // namespace txncat
