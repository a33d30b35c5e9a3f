#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "txncat/matrix.hpp"

namespace txncat {

/// Handle to a value recorded on a Tape.
struct ValueId {
  std::uint32_t index = 0;
};

/// Reverse-mode gradient tape over Matrix-valued primitives.
///
/// Forward calls append nodes in execution order; backward() replays them in
/// exact reverse order, accumulating gradients for every tracked node. Leaves
/// created with param() are tracked; constants are not, and neither is any
/// node derived exclusively from constants. A non-recording tape evaluates
/// the same forward math without storing backward closures, which is the
/// inference fast path.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  ValueId constant(Matrix value);
  ValueId param(Matrix value);

  ValueId matmul(ValueId a, ValueId b);
  ValueId add(ValueId a, ValueId b);
  ValueId add_row_broadcast(ValueId a, ValueId row);
  ValueId scale(ValueId a, double factor);
  ValueId transpose(ValueId a);
  ValueId relu(ValueId a);
  ValueId sigmoid(ValueId a);
  ValueId softmax_rows(ValueId a);
  ValueId softmax_rows(ValueId a, std::vector<std::uint8_t> valid_cols);
  ValueId layer_norm(ValueId x, ValueId gamma, ValueId beta, double eps);
  /// Gathers table rows by token id; gradients scatter-add back into the table.
  ValueId embedding_rows(ValueId table, std::vector<std::uint32_t> ids);
  ValueId slice_cols(ValueId a, std::size_t start, std::size_t len);
  ValueId concat_cols(std::span<const ValueId> parts);
  /// Mean over rows, producing a 1 x cols vector.
  ValueId mean_rows(ValueId a);
  ValueId sum_all(ValueId a);
  /// -log(probs[target]) with the kCrossEntropyFloor clamp; 1x1 output.
  ValueId cross_entropy(ValueId probs, std::size_t target);
  /// Divides each row by its sum. Rows must have positive sums.
  ValueId normalize_rows(ValueId a);
  ValueId mean_scalars(std::span<const ValueId> scalars);

  const Matrix& value(ValueId id) const { return nodes_[id.index].value; }
  bool tracked(ValueId id) const { return nodes_[id.index].tracked; }

  /// Reverse pass from a scalar (1x1) node. Resets previous gradients.
  void backward(ValueId loss);

  /// Gradient computed by the last backward(); zero matrix if the node was
  /// never touched (still shape-congruent with its value).
  const Matrix& grad(ValueId id);

  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return recording_; }

 private:
  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;

  struct Node {
    Matrix value;
    bool tracked = false;
    BackwardFn backward;
  };

  ValueId push(Matrix value, bool tracked, BackwardFn fn);
  /// Accumulates delta into a tracked input's gradient buffer.
  void accumulate(ValueId id, const Matrix& delta);
  Matrix& grad_buf(ValueId id);

  bool recording_;
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

}  // namespace txncat
