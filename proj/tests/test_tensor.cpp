// Copyright 2026 The cuctx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "cuctx/autograd.hpp"
#include "cuctx/error.hpp"
#include "cuctx/gradcheck.hpp"
#include "cuctx/tensor.hpp"
#include "support.hpp"

namespace cuctx {
namespace {

using testing::naive_matmul;
using testing::random_tensor;
using testing::TestRng;

TEST(Matmul, IdentityAndHandArithmetic) {
  Tensor id = Tensor::matrix({{1, 0}, {0, 1}});
  Tensor b = Tensor::matrix({{3}, {4}});
  EXPECT_TRUE(bitwise_equal(ops::matmul(id, b), b));
  Tensor c = ops::matmul(Tensor::matrix({{1, 2}}), b);
  EXPECT_EQ(c(0, 0), 11.0);
}

TEST(Matmul, MatchesTripleLoop) {
  TestRng rng(7);
  Tensor a = random_tensor(rng, {5, 4});
  Tensor b = random_tensor(rng, {4, 3});
  EXPECT_LT(max_abs_diff(ops::matmul(a, b), naive_matmul(a, b)), 1e-12);
  Tensor bt = ops::transpose(b);
  EXPECT_LT(max_abs_diff(ops::matmul_bt(a, bt), naive_matmul(a, b)), 1e-12);
  EXPECT_LT(max_abs_diff(ops::matmul_at(ops::transpose(a), b), naive_matmul(a, b)), 1e-12);
}

TEST(Matmul, ShapeMismatchIsDimensionError) {
  try {
    ops::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(MaskedSoftmax, SymmetricCases) {
  BoolMatrix all(1, 2, true);
  Tensor p = ops::masked_softmax(Tensor::matrix({{0, 0}}), all);
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(0, 1), 0.5);

  BoolMatrix m(1, 3, true);
  m.set(0, 1, false);
  Tensor q = ops::masked_softmax(Tensor::matrix({{5, 5, 5}}), m);
  EXPECT_EQ(q(0, 0), 0.5);
  EXPECT_EQ(q(0, 1), 0.0);
  EXPECT_EQ(q(0, 2), 0.5);
}

TEST(MaskedSoftmax, MatchesDirectFormula) {
  Tensor p = ops::masked_softmax(Tensor::matrix({{1, 2, 3}}), BoolMatrix(1, 3, true));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(0, k), std::exp(k + 1.0) / z, 1e-12);
}

TEST(MaskedSoftmax, RowsSumToOneAndShiftInvariant) {
  TestRng rng(3);
  Tensor logits = random_tensor(rng, {4, 6}, -5, 5);
  BoolMatrix mask(4, 6, false);
  std::bernoulli_distribution coin(0.5);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 6; ++c) mask.set(r, c, coin(rng));
    mask.set(r, r, true);
  }
  Tensor p = ops::masked_softmax(logits, mask);
  Tensor shifted = logits;
  for (int c = 0; c < 6; ++c) shifted(2, c) += 17.25;
  Tensor ps = ops::masked_softmax(shifted, mask);
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    for (int c = 0; c < 6; ++c) {
      if (!mask(r, c)) EXPECT_EQ(p(r, c), 0.0);
      s += p(r, c);
      EXPECT_NEAR(p(r, c), ps(r, c), 1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(MaskedSoftmax, FullyMaskedRowIsDegenerate) {
  BoolMatrix mask(2, 2, true);
  mask.set(1, 0, false);
  mask.set(1, 1, false);
  try {
    ops::masked_softmax(Tensor::zeros({2, 2}), mask);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateRow);
  }
}

TEST(LayerNorm, ConstantAndSymmetricRows) {
  Tensor gain = Tensor::full({2}, 1.0);
  Tensor bias = Tensor::zeros({2});
  Tensor c = ops::layer_norm(Tensor::matrix({{4, 4}}), gain, bias);
  EXPECT_EQ(c(0, 0), 0.0);
  EXPECT_EQ(c(0, 1), 0.0);
  Tensor s = ops::layer_norm(Tensor::matrix({{1, -1}}), gain, bias);
  EXPECT_NEAR(s(0, 0), 1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
  EXPECT_NEAR(s(0, 1), -1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
}

TEST(LayerNorm, RandomRowStatistics) {
  TestRng rng(11);
  Tensor x = random_tensor(rng, {3, 16}, -4, 4);
  auto r = ops::layer_norm_ex(x, Tensor::full({16}, 1.0), Tensor::zeros({16}));
  for (int t = 0; t < 3; ++t) {
    double mean = 0.0;
    double var = 0.0;
    for (int d = 0; d < 16; ++d) mean += r.normalized(t, d) / 16.0;
    for (int d = 0; d < 16; ++d) var += (r.normalized(t, d) - mean) * (r.normalized(t, d) - mean) / 16.0;
    EXPECT_LT(std::abs(mean), 1e-12);
    EXPECT_LT(std::abs(var - 1.0), 1e-4);
  }
}

TEST(BatchNorm, EvalWithUnitStatisticsIsIdentity) {
  TestRng rng(5);
  Tensor x = random_tensor(rng, {3, 5});
  Tensor y = ops::batch_norm_1d(x, BatchNormState::identity(3), false);
  EXPECT_LT(max_abs_diff(x, y), 1e-5);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i] / std::sqrt(1.0 + 1e-5), 1e-15);
}

TEST(BatchNorm, ConstantChannelNormalisesToZero) {
  Tensor x = Tensor::matrix({{2, 2, 2}});
  Tensor y = ops::batch_norm_1d(x, BatchNormState::identity(1), true);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 0.0);
}

TEST(BatchNorm, SingleFrameTrainingUsesEpsilon) {
  Tensor y = ops::batch_norm_1d(Tensor::matrix({{3}, {-1}}), BatchNormState::identity(2), true);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 0.0);
}

TEST(BatchNorm, RunningStatisticsConvergeToTrainingBehaviour) {
  TestRng rng(9);
  Tensor x = random_tensor(rng, {4, 10}, -3, 3);
  BatchNormState state = BatchNormState::identity(4);
  Tensor train;
  for (int i = 0; i < 400; ++i) {
    BatchNormState next;
    train = ops::batch_norm_1d(x, state, true, &next);
    state = next;
  }
  // Running variance is the biased batch variance, so the fixpoint matches.
  Tensor eval = ops::batch_norm_1d(x, state, false);
  EXPECT_LT(max_abs_diff(train, eval), 1e-6);
}

TEST(Convolution, DepthwiseIdentityKernel) {
  TestRng rng(2);
  Tensor x = random_tensor(rng, {6, 3});
  Tensor k = Tensor::zeros({3, 3});
  for (int c = 0; c < 3; ++c) k(1, c) = 1.0;
  EXPECT_TRUE(bitwise_equal(ops::depthwise_conv1d(x, k, Tensor::zeros({3}), false), x));
}

TEST(Convolution, StrideTwoLength) {
  Tensor x = Tensor::zeros({1, 8, 4});
  Tensor y = ops::conv2d_stride2(x, Tensor::zeros({2, 1, 3, 3}), Tensor::zeros({2}), false);
  EXPECT_EQ(y.dim(1), 4);
  EXPECT_EQ(y.dim(2), 2);
  EXPECT_EQ(ops::conv2d_stride2_geometry(7, 5, true).out_time, 4);
}

TEST(Convolution, CausalDepthwiseIsPrefixInvariant) {
  TestRng rng(4);
  Tensor x = random_tensor(rng, {8, 2});
  Tensor k = random_tensor(rng, {5, 2});
  Tensor b = random_tensor(rng, {2});
  Tensor full = ops::depthwise_conv1d(x, k, b, true);
  for (int t = 0; t < 8; ++t) {
    Tensor cut = x;
    for (int r = t + 1; r < 8; ++r) {
      for (int c = 0; c < 2; ++c) cut(r, c) = 0.0;
    }
    Tensor y = ops::depthwise_conv1d(cut, k, b, true);
    for (int r = 0; r <= t; ++r) {
      for (int c = 0; c < 2; ++c) EXPECT_EQ(y(r, c), full(r, c));
    }
  }
}

TEST(Convolution, CausalStrideTwoIsPrefixInvariant) {
  TestRng rng(8);
  Tensor x = random_tensor(rng, {1, 12, 5});
  Tensor w = random_tensor(rng, {2, 1, 3, 3});
  Tensor b = random_tensor(rng, {2});
  Tensor full = ops::conv2d_stride2(x, w, b, true);
  // Output frame j reads input frames <= 2j.
  Tensor cut = x;
  for (int t = 5; t < 12; ++t) {
    for (int f = 0; f < 5; ++f) cut[static_cast<std::size_t>(t * 5 + f)] = 9.0;
  }
  Tensor y = ops::conv2d_stride2(cut, w, b, true);
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j <= 2; ++j) {
      for (int f = 0; f < 3; ++f) {
        const std::size_t i = static_cast<std::size_t>((c * 6 + j) * 3 + f);
        EXPECT_EQ(y[i], full[i]);
      }
    }
  }
}

TEST(Convolution, EvenSymmetricKernelRejected) {
  EXPECT_THROW(ops::depthwise_conv1d(Tensor::zeros({4, 1}), Tensor::zeros({2, 1}),
                                     Tensor::zeros({1}), false),
               Error);
}

TEST(Activations, Values) {
  Tensor r = ops::relu(Tensor::matrix({{-1, 2}}));
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(0, 1), 2.0);
  EXPECT_EQ(ops::swish(Tensor::matrix({{0}}))(0, 0), 0.0);
  Tensor g = ops::glu(Tensor::matrix({{3, -2, 0, 0}}));
  EXPECT_EQ(g(0, 0), 1.5);
  EXPECT_EQ(g(0, 1), -1.0);
}

TEST(Activations, GluOddWidthIsDimensionError) {
  try {
    ops::glu(Tensor::zeros({2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Tensor, DeterministicAcrossRuns) {
  TestRng a(21);
  TestRng b(21);
  Tensor x = random_tensor(a, {4, 6});
  Tensor y = random_tensor(b, {4, 6});
  Tensor w = Tensor::full({6, 3}, 0.25);
  EXPECT_TRUE(bitwise_equal(ops::matmul(ops::swish(x), w), ops::matmul(ops::swish(y), w)));
}

// Finite-difference checks of each differentiable primitive. The objective
// is a random linear functional of the op's output.
class KernelGradient : public ::testing::Test {
 protected:
  static constexpr double kStep = 1e-6;
  static constexpr double kTolerance = 1e-6;

  void check(std::vector<Tensor> inputs, const std::function<Var(std::span<const Var>)>& op,
             double floor = 1e-3) {
    TestRng rng(99);
    Tensor probe;
    auto objective = [&](Tape&, std::span<const Var> in) {
      Var out = op(in);
      if (probe.empty()) probe = random_tensor(rng, out.value().shape());
      return sum(mul(out, out.tape()->leaf(probe)));
    };
    const auto r = check_input_gradients(std::move(inputs), objective, kStep, floor);
    EXPECT_LT(r.max_relative_error, kTolerance) << "worst " << r.worst_entry;
  }

  TestRng rng_{12345};
  Tensor rand(std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    return random_tensor(rng_, std::move(shape), lo, hi);
  }
};

TEST_F(KernelGradient, Elementwise) {
  check({rand({3, 4}), rand({3, 4})}, [](auto in) { return add(in[0], in[1]); });
  check({rand({3, 4}), rand({3, 4})}, [](auto in) { return sub(in[0], in[1]); });
  check({rand({3, 4}), rand({3, 4})}, [](auto in) { return mul(in[0], in[1]); });
  check({rand({3, 4})}, [](auto in) { return scale(in[0], -2.5); });
  check({rand({3, 4}), rand({4})}, [](auto in) { return add_row_bias(in[0], in[1]); });
}

TEST_F(KernelGradient, Linear) {
  check({rand({3, 4}), rand({4, 2})}, [](auto in) { return matmul(in[0], in[1]); });
  check({rand({3, 4}), rand({2, 4})}, [](auto in) { return matmul_bt(in[0], in[1]); });
  check({rand({3, 4})}, [](auto in) { return transpose(in[0]); });
  check({rand({3, 4}), rand({4, 5}), rand({5})},
        [](auto in) { return linear(in[0], in[1], in[2]); });
}

TEST_F(KernelGradient, Activations) {
  // Keep relu inputs away from the kink.
  Tensor r = rand({3, 4}, 0.1, 1.0);
  for (std::size_t i = 0; i < r.size(); i += 2) r[i] = -r[i];
  check({r}, [](auto in) { return relu(in[0]); });
  check({rand({3, 4}, -3, 3)}, [](auto in) { return swish(in[0]); });
  check({rand({3, 4}, -3, 3)}, [](auto in) { return sigmoid(in[0]); });
  check({rand({3, 4}, -2, 2)}, [](auto in) { return tanh(in[0]); });
  check({rand({3, 4}, -2, 2)}, [](auto in) { return glu(in[0]); });
}

TEST_F(KernelGradient, Softmaxes) {
  BoolMatrix mask(3, 4, true);
  mask.set(0, 3, false);
  mask.set(2, 0, false);
  mask.set(2, 1, false);
  check({rand({3, 4}, -2, 2)}, [mask](auto in) { return masked_softmax(in[0], mask); });
  check({rand({3, 4}, -2, 2)}, [](auto in) { return softmax_rows(in[0]); });
  check({rand({3, 4}, -2, 2)}, [](auto in) { return log_softmax(in[0]); });
}

TEST_F(KernelGradient, Norms) {
  check({rand({3, 4}, -2, 2), rand({4}), rand({4})},
        [](auto in) { return layer_norm(in[0], in[1], in[2]); });
  check({rand({3, 4}, -2, 2), rand({3}), rand({3})}, [](auto in) {
    BatchNormState state = BatchNormState::identity(3);
    return batch_norm_1d(in[0], in[1], in[2], state, true);
  });
  BatchNormState eval_state{Tensor({3}, {0.1, -0.2, 0.3}), Tensor({3}, {0.5, 2.0, 1.5})};
  check({rand({3, 4}, -2, 2), rand({3}), rand({3})}, [eval_state](auto in) {
    BatchNormState state = eval_state;
    return batch_norm_1d(in[0], in[1], in[2], state, false);
  });
}

TEST_F(KernelGradient, Convolutions) {
  for (bool causal : {false, true}) {
    check({rand({5, 3}), rand({3, 3}), rand({3})},
          [causal](auto in) { return depthwise_conv1d(in[0], in[1], in[2], causal); });
    check({rand({2, 5, 4}), rand({3, 2, 3, 3}), rand({3})},
          [causal](auto in) { return conv2d_stride2(in[0], in[1], in[2], causal); });
  }
}

TEST_F(KernelGradient, ShapeOps) {
  check({rand({3, 4})}, [](auto in) { return reshape(in[0], {4, 3}); });
  check({rand({2, 3, 4})}, [](auto in) { return flatten_time_major(in[0]); });
  check({rand({3, 4}), rand({2, 4})}, [](auto in) { return concat_rows(in); });
  check({rand({3, 4}), rand({3, 2})}, [](auto in) { return concat_cols(in); });
  check({rand({4, 4})}, [](auto in) { return slice_rows(in[0], 1, 2); });
  check({rand({3, 5})}, [](auto in) { return slice_cols(in[0], 2, 3); });
  const std::vector<int> ids = {2, 0, 2, 1};
  check({rand({3, 4})}, [ids](auto in) { return gather_rows(in[0], ids); });
  check({rand({3, 4}), rand({2, 4})}, [](auto in) { return pair_add(in[0], in[1]); });
  check({rand({3, 4})}, [](auto in) { return sum(in[0]); });
}

TEST(StopGradient, BlocksUpstream) {
  Tape tape;
  Var x = tape.leaf(Tensor::matrix({{1, 2}}));
  Var y = add(stop_gradient(scale(x, 3.0)), x);
  tape.backward(sum(y));
  EXPECT_TRUE(x.has_grad());
  EXPECT_EQ(x.grad()(0, 0), 1.0);
  EXPECT_EQ(x.grad()(0, 1), 1.0);
}

}  // namespace
}  // namespace cuctx
