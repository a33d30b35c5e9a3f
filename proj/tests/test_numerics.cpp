#include <gtest/gtest.h>

#include <cmath>

#include "txncat/adam.hpp"
#include "txncat/error.hpp"
#include "txncat/gradcheck.hpp"
#include "txncat/matrix.hpp"
#include "txncat/rng.hpp"
#include "txncat/tape.hpp"

namespace txncat {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                     double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.at(i) = rng.uniform(lo, hi);
  return m;
}

// Literal-definition reference: out(i,j) = sum_k a(i,k) b(k,j).
Matrix matmul_reference(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix out = matmul(Matrix::identity(2), a);
  EXPECT_EQ(out, a);
}

TEST(Matmul, HandEvaluatedTwoByTwo) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  const Matrix out = matmul(a, b);
  EXPECT_EQ(out, Matrix::from_rows({{19, 22}, {43, 50}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 2));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2x2"), std::string::npos);
  }
}

TEST(Matmul, AgreesWithReferenceOnRandomInstances) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(5, 5, rng);
    const Matrix b = random_matrix(5, 5, rng);
    const Matrix got = matmul(a, b);
    const Matrix want = matmul_reference(a, b);
    for (std::size_t i = 0; i < got.size(); ++i)
      EXPECT_NEAR(got.at(i), want.at(i), 1e-12);
  }
}

TEST(SoftmaxRows, SymmetricRowSplitsEvenly) {
  const Matrix out = softmax_rows(Matrix::row_vector({0, 0}));
  EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.5);
}

TEST(SoftmaxRows, HandEvaluatedRow) {
  const Matrix out = softmax_rows(Matrix::row_vector({1, 2, 3}));
  EXPECT_NEAR(out(0, 0), 0.09003057317038046, 1e-15);
  EXPECT_NEAR(out(0, 1), 0.24472847105479764, 1e-15);
  EXPECT_NEAR(out(0, 2), 0.66524095577482190, 1e-15);
}

TEST(SoftmaxRows, LargeInputsDoNotOverflow) {
  const Matrix out = softmax_rows(Matrix::row_vector({1000, 1000}));
  EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.5);
}

TEST(SoftmaxRows, RowsSumToOneAcrossWideRange) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(3, 6, rng, -1e3, 1e3);
    const Matrix out = softmax_rows(a);
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < out.cols(); ++j) {
        EXPECT_GT(out(i, j), 0.0);
        EXPECT_LT(out(i, j), 1.0);
        sum += out(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(SoftmaxRows, MaskedColumnsGetExactlyZero) {
  const Matrix a = Matrix::row_vector({3, 1, 2, 5});
  const std::vector<std::uint8_t> valid{1, 0, 1, 0};
  const Matrix out = softmax_rows(a, valid);
  EXPECT_EQ(out(0, 1), 0.0);
  EXPECT_EQ(out(0, 3), 0.0);
  EXPECT_NEAR(out(0, 0) + out(0, 2), 1.0, 1e-12);
  const double expect0 = 1.0 / (1.0 + std::exp(-1.0));  // e^3 / (e^3 + e^2)
  EXPECT_NEAR(out(0, 0), expect0, 1e-15);
}

TEST(Elementwise, ReluAtSignBoundaries) {
  const Matrix out = elementwise(Matrix::row_vector({-1, 0, 2}), Activation::kRelu);
  EXPECT_EQ(out, Matrix::row_vector({0, 0, 2}));
}

TEST(Elementwise, SigmoidValues) {
  EXPECT_DOUBLE_EQ(elementwise(Matrix::row_vector({0}), Activation::kSigmoid)(0, 0), 0.5);
  EXPECT_NEAR(elementwise(Matrix::row_vector({2}), Activation::kSigmoid)(0, 0),
              0.8807970779778823, 1e-15);
  // Stable in the far tails.
  const Matrix tails = elementwise(Matrix::row_vector({-800, 800}), Activation::kSigmoid);
  EXPECT_GE(tails(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(tails(0, 1), 1.0);
}

TEST(LayerNorm, ZeroVarianceCollapsesToBeta) {
  const Matrix out = layer_norm(Matrix::row_vector({5, 5, 5}),
                                Matrix::row_vector({1, 1, 1}),
                                Matrix::row_vector({0, 0, 0}), 1e-5);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out(0, j), 0.0, 1e-12);
}

TEST(LayerNorm, AlreadyNormalizedRowPassesThrough) {
  const Matrix out = layer_norm(Matrix::row_vector({1, -1}),
                                Matrix::row_vector({1, 1}),
                                Matrix::row_vector({0, 0}), 1e-12);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(out(0, 1), -1.0, 1e-9);
}

TEST(LayerNorm, HandEvaluatedAffine) {
  const Matrix out = layer_norm(Matrix::row_vector({0, 2}),
                                Matrix::row_vector({2, 2}),
                                Matrix::row_vector({1, 1}), 1e-12);
  EXPECT_NEAR(out(0, 0), -1.0, 1e-9);
  EXPECT_NEAR(out(0, 1), 3.0, 1e-9);
}

TEST(CrossEntropy, CertainCorrectClassGivesZeroLoss) {
  EXPECT_DOUBLE_EQ(cross_entropy(Matrix::row_vector({0, 1, 0}), 1), 0.0);
}

TEST(CrossEntropy, UniformFourWay) {
  const Matrix uniform = Matrix::row_vector({0.25, 0.25, 0.25, 0.25});
  for (std::size_t target = 0; target < 4; ++target)
    EXPECT_NEAR(cross_entropy(uniform, target), 1.3862943611198906, 1e-15);
}

TEST(CrossEntropy, TargetOutOfRangeThrows) {
  EXPECT_THROW(cross_entropy(Matrix::row_vector({0.5, 0.5}), 2), IndexError);
}

TEST(CrossEntropy, NonNegativeAndZeroOnlyAtCertainty) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix p = random_matrix(1, 5, rng, 0.0, 1.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) sum += p(0, j);
    for (std::size_t j = 0; j < 5; ++j) p(0, j) /= sum;
    const std::size_t target = rng.below(5);
    const double loss = cross_entropy(p, target);
    EXPECT_GE(loss, 0.0);
    if (p(0, target) < 1.0 - 1e-12) EXPECT_GT(loss, 0.0);
  }
}

// ---- gradient checking --------------------------------------------------

TEST(GradCheck, QuadraticIsExactUnderCentralDifferences) {
  const ScalarFn f = [](const std::vector<Matrix>& p) {
    return p[0](0, 0) * p[0](0, 0);
  };
  const GradFn g = [](const std::vector<Matrix>& p) {
    Matrix d(1, 1);
    d(0, 0) = 2.0 * p[0](0, 0);
    return std::vector<Matrix>{d};
  };
  Matrix x(1, 1);
  x(0, 0) = 3.0;
  EXPECT_LT(grad_check(f, g, {x}, 1e-5), 1e-9);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
  const ScalarFn f = [](const std::vector<Matrix>&) { return 4.25; };
  const GradFn g = [](const std::vector<Matrix>& p) {
    return std::vector<Matrix>{Matrix(p[0].rows(), p[0].cols())};
  };
  EXPECT_DOUBLE_EQ(grad_check(f, g, {Matrix(2, 2)}, 1e-5), 0.0);
}

TEST(GradCheck, RejectsEpsOutsideRange) {
  const ScalarFn f = [](const std::vector<Matrix>&) { return 0.0; };
  const GradFn g = [](const std::vector<Matrix>& p) {
    return std::vector<Matrix>{Matrix(p[0].rows(), p[0].cols())};
  };
  EXPECT_THROW(grad_check(f, g, {Matrix(1, 1)}, 1e-2), ConfigError);
}

// Runs grad_check on a tape-built scalar function of the given parameters.
using BuildFn = std::function<ValueId(Tape&, const std::vector<ValueId>&)>;

double check_tape_op(const std::vector<Matrix>& params, const BuildFn& build) {
  const ScalarFn f = [&](const std::vector<Matrix>& ps) {
    Tape t(false);
    std::vector<ValueId> ids;
    ids.reserve(ps.size());
    for (const Matrix& p : ps) ids.push_back(t.param(p));
    return t.value(build(t, ids))(0, 0);
  };
  const GradFn g = [&](const std::vector<Matrix>& ps) {
    Tape t;
    std::vector<ValueId> ids;
    ids.reserve(ps.size());
    for (const Matrix& p : ps) ids.push_back(t.param(p));
    t.backward(build(t, ids));
    std::vector<Matrix> grads;
    grads.reserve(ids.size());
    for (ValueId id : ids) grads.push_back(t.grad(id));
    return grads;
  };
  return grad_check(f, g, params, 1e-5);
}

TEST(TapeGradients, EveryPrimitivePassesGradCheck) {
  Rng rng(101);
  const double tol = 1e-4;

  EXPECT_LT(check_tape_op({random_matrix(3, 4, rng), random_matrix(4, 2, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.matmul(p[0], p[1]));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(2, 3, rng), random_matrix(2, 3, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.add(p[0], p[1]));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(3, 4, rng), random_matrix(1, 4, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.add_row_broadcast(p[0], p[1]));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(2, 5, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.scale(t.transpose(p[0]), -1.7));
                          }),
            tol);

  // Keep relu inputs away from the kink at zero.
  Matrix relu_in = random_matrix(2, 4, rng, 0.2, 1.0);
  for (std::size_t i = 0; i < relu_in.size(); ++i)
    if (rng.uniform() < 0.5) relu_in.at(i) = -relu_in.at(i);
  EXPECT_LT(check_tape_op({relu_in},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.relu(p[0]));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(2, 4, rng, -3.0, 3.0)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.sigmoid(p[0]));
                          }),
            tol);

  // Weighted softmax output so the gradient is not identically zero.
  EXPECT_LT(check_tape_op({random_matrix(2, 4, rng, -2.0, 2.0)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            Matrix w(4, 1);
                            for (std::size_t i = 0; i < 4; ++i)
                              w(i, 0) = static_cast<double>(i) - 1.2;
                            return t.sum_all(
                                t.matmul(t.softmax_rows(p[0]), t.constant(w)));
                          }),
            tol);

  EXPECT_LT(check_tape_op(
                {random_matrix(2, 4, rng, -2.0, 2.0)},
                [](Tape& t, const std::vector<ValueId>& p) {
                  Matrix w(4, 1);
                  for (std::size_t i = 0; i < 4; ++i) w(i, 0) = 0.3 * (i + 1.0);
                  return t.sum_all(t.matmul(
                      t.softmax_rows(p[0], {1, 0, 1, 1}), t.constant(w)));
                }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(3, 4, rng), random_matrix(1, 4, rng, 0.5, 1.5),
                           random_matrix(1, 4, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            Matrix w(4, 1);
                            for (std::size_t i = 0; i < 4; ++i) w(i, 0) = 1.0 + 0.5 * i;
                            return t.sum_all(t.matmul(
                                t.layer_norm(p[0], p[1], p[2], 1e-5), t.constant(w)));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(6, 3, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.embedding_rows(p[0], {1, 4, 1}));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(3, 6, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.slice_cols(p[0], 2, 3));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(2, 3, rng), random_matrix(2, 2, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            const std::vector<ValueId> parts{p[0], p[1]};
                            Matrix w(5, 1);
                            for (std::size_t i = 0; i < 5; ++i) w(i, 0) = 0.7 - 0.3 * i;
                            return t.sum_all(t.matmul(t.concat_cols(parts), t.constant(w)));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(4, 3, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.sum_all(t.mean_rows(p[0]));
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(1, 5, rng, 0.1, 1.0)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            return t.cross_entropy(t.normalize_rows(p[0]), 2);
                          }),
            tol);

  EXPECT_LT(check_tape_op({random_matrix(1, 1, rng), random_matrix(1, 1, rng)},
                          [](Tape& t, const std::vector<ValueId>& p) {
                            const std::vector<ValueId> parts{p[0], p[1], p[0]};
                            return t.mean_scalars(parts);
                          }),
            tol);
}

TEST(TapeGradients, ReusedNodeAccumulatesBothPaths) {
  // f(x) = x^3 built as (x*x)*x; gradient must combine both uses of x.
  Matrix x(1, 1);
  x(0, 0) = 1.7;
  Tape t;
  const ValueId px = t.param(x);
  const ValueId y = t.matmul(t.matmul(px, px), px);
  t.backward(y);
  EXPECT_NEAR(t.grad(px)(0, 0), 3.0 * 1.7 * 1.7, 1e-12);
}

TEST(TapeGradients, UnusedParameterGetsZeroGradient) {
  Tape t;
  const ValueId used = t.param(Matrix::row_vector({2.0}));
  const ValueId unused = t.param(Matrix::row_vector({5.0}));
  t.backward(t.sum_all(used));
  EXPECT_EQ(t.grad(unused), Matrix(1, 1));
  EXPECT_DOUBLE_EQ(t.grad(used)(0, 0), 1.0);
}

TEST(TapeGradients, ConstantsAreNotTracked) {
  Tape t;
  const ValueId c = t.constant(Matrix::row_vector({1.0, 2.0}));
  const ValueId p = t.param(Matrix::row_vector({3.0, 4.0}));
  const ValueId out = t.sum_all(t.add(c, p));
  EXPECT_FALSE(t.tracked(c));
  EXPECT_TRUE(t.tracked(out));
  t.backward(out);
  EXPECT_EQ(t.grad(p), Matrix::row_vector({1.0, 1.0}));
}

// ---- Adam ----------------------------------------------------------------

TEST(Adam, FirstStepIsBiasCorrectedSignedStep) {
  Matrix p(1, 1);
  Matrix g(1, 1);
  g(0, 0) = 2.0;
  AdamState state(AdamConfig{.lr = 1e-3});
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  state.step(ps, gs);
  // m_hat = 2, v_hat = 4, step = lr * 2 / (2 + eps) ~= lr.
  EXPECT_NEAR(p(0, 0), -1e-3, 1e-11);
  EXPECT_EQ(state.steps(), 1u);
}

TEST(Adam, ZeroGradientIsParameterNoOp) {
  Matrix p = Matrix::from_rows({{0.5, -0.25}, {1.5, 0.0}});
  const Matrix before = p;
  Matrix g(2, 2);
  AdamState state;
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  state.step(ps, gs);
  state.step(ps, gs);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.steps(), 2u);
}

TEST(Adam, TwoStepsDifferFromOneDoubledStep) {
  // Adam is not linear in the step count: two updates at lr differ from one
  // update at 2*lr for the same gradient.
  Matrix p1(1, 1), p2(1, 1);
  Matrix g(1, 1);
  g(0, 0) = 0.7;
  AdamState two(AdamConfig{.lr = 1e-3});
  Matrix* ps1[] = {&p1};
  const Matrix* gs[] = {&g};
  two.step(ps1, gs);
  two.step(ps1, gs);
  AdamState doubled(AdamConfig{.lr = 2e-3});
  Matrix* ps2[] = {&p2};
  doubled.step(ps2, gs);
  EXPECT_NE(p1(0, 0), p2(0, 0));
}

TEST(Adam, ShapeMismatchThrows) {
  Matrix p(2, 2);
  Matrix g(2, 3);
  AdamState state;
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  EXPECT_THROW(state.step(ps, gs), ShapeError);
}

}  // namespace
}  // namespace txncat
