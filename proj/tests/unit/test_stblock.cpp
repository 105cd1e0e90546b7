// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "gcnm/stblock.hpp"

using namespace gcnm;

namespace {

Sequence scalar_seq(const std::vector<double>& v) {
  Sequence s;
  for (double x : v) s.push_back(Matrix(1, 1, x));
  return s;
}

Sequence random_seq(std::size_t len, std::size_t n, std::size_t d, Rng& rng) {
  Sequence s(len, Matrix(n, d));
  for (auto& m : s)
    for (double& v : m.values()) v = rng.normal();
  return s;
}

}  // namespace

TEST(DilatedConv, OutputLengths) {
  const std::vector<int> dil{1, 2};
  EXPECT_EQ(conv_output_length(12, 2, dil), 9u);
  EXPECT_EQ(conv_output_length(13, 2, std::vector<int>{1, 2, 1, 2, 1, 2, 1, 2}), 1u);
}

TEST(DilatedConv, AveragingKernel) {
  const Matrix half(1, 1, 0.5);
  const Matrix* taps[] = {&half, &half};
  const Sequence out = dilated_causal_conv(scalar_seq({1, 3}), taps, nullptr, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0](0, 0), 2.0);
}

TEST(DilatedConv, DeltaKernelIsIdentityOnValidRange) {
  const Matrix one(1, 1, 1.0), zero(1, 1, 0.0);
  const Matrix* taps[] = {&one, &zero};
  const Sequence in = scalar_seq({4, 5, 6, 7, 8});
  const Sequence out = dilated_causal_conv(in, taps, nullptr, 2);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(out[j](0, 0), in[j + 2](0, 0));
}

TEST(DilatedConv, TooShortNamesMinimum) {
  const Matrix one(1, 1, 1.0);
  const Matrix* taps[] = {&one, &one};
  try {
    dilated_causal_conv(scalar_seq({1, 2}), taps, nullptr, 2);
    FAIL() << "expected length_error";
  } catch (const std::length_error& e) {
    EXPECT_NE(std::string(e.what()).find("at least 3"), std::string::npos) << e.what();
  }
}

TEST(GraphConv, ZeroAdjacencyKeepsOnlyFirstTerm) {
  Rng rng(1);
  ParameterSet ps;
  std::vector<Parameter*> w;
  for (int k = 0; k < 3; ++k) {
    Parameter& p = ps.create("w" + std::to_string(k), 2, 2);
    p.value = k == 0 ? Matrix::identity(2) : Matrix(2, 2, 5.0);
    w.push_back(&p);
  }
  const Sequence h = random_seq(3, 4, 2, rng);
  const Sequence out = dynamic_graph_conv(h, Sequence(3, Matrix(4, 4)), w);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(out[t], h[t]);
}

TEST(GraphConv, TwoNodeHandExample) {
  ParameterSet ps;
  Parameter& w0 = ps.create("w0", 1, 1);
  Parameter& w1 = ps.create("w1", 1, 1);
  w0.value(0, 0) = 2.0;
  w1.value(0, 0) = 3.0;
  Parameter* w[] = {&w0, &w1};
  Matrix a(2, 2);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  Matrix h(2, 1);
  h(0, 0) = 1.0;
  h(1, 0) = 10.0;
  const Sequence out = dynamic_graph_conv({h}, {a}, w);
  EXPECT_DOUBLE_EQ(out[0](0, 0), 1.0 * 2.0 + 10.0 * 3.0);
  EXPECT_DOUBLE_EQ(out[0](1, 0), 10.0 * 2.0 + 1.0 * 3.0);
}

TEST(GraphConv, LengthMismatchRejected) {
  ParameterSet ps;
  Parameter& w0 = ps.create("w0", 1, 1);
  Parameter* w[] = {&w0};
  EXPECT_THROW(dynamic_graph_conv(scalar_seq({1, 2}), Sequence(3, Matrix(1, 1)), w), std::invalid_argument);
}

TEST(STBlock, ResidualLengthsAndSkip) {
  Rng rng(4);
  ParameterSet ps;
  BlockOptions o;
  o.nodes = 5;
  o.d = 3;
  STBlock block(ps, "b.", o, rng);
  const Sequence in = random_seq(12, 5, 3, rng);
  STBlock::Cache cache;
  const auto out = block.forward(in, nullptr, Matrix::identity(5), cache);
  EXPECT_EQ(out.out.size(), 9u);
  EXPECT_EQ(out.skip.size(), 9u);
  EXPECT_EQ(block.output_length(13), 10u);
}

TEST(STBlock, PredefinedModeDiffusesOverGivenGraph) {
  Rng rng(6);
  ParameterSet ps;
  BlockOptions o;
  o.nodes = 4;
  o.d = 2;
  o.K = 1;
  o.mode = GraphMode::pre;
  STBlock block(ps, "b.", o, rng);
  Matrix adj(4, 4);
  adj(0, 1) = adj(1, 2) = adj(2, 3) = adj(3, 0) = 1.0;
  const Matrix p = row_normalize(adj);
  const Sequence in = random_seq(6, 4, 2, rng);
  STBlock::Cache cache;
  const auto out = block.forward(in, nullptr, p, cache);
  for (std::size_t j = 0; j < out.out.size(); ++j) {
    Matrix expect = in[j + 3];
    matmul_acc(cache.h[j], block.conv_weights[0]->value, expect);
    matmul_acc(matmul(p, cache.h[j]), block.conv_weights[1]->value, expect);
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(out.out[j].data()[i], expect.data()[i], 1e-13);
  }
}

TEST(STBlock, AdaptiveModeUsesOneGraphForAllSteps) {
  Rng rng(7);
  ParameterSet ps;
  BlockOptions o;
  o.nodes = 4;
  o.d = 2;
  o.K = 1;
  o.mode = GraphMode::adp;
  STBlock block(ps, "b.", o, rng);
  const Sequence in = random_seq(6, 4, 2, rng);
  STBlock::Cache cache;
  const auto out = block.forward(in, nullptr, Matrix::identity(4), cache);
  const Matrix& p = cache.adaptive_transition;
  for (std::size_t j = 0; j < out.out.size(); ++j) {
    Matrix expect = in[j + 3];
    matmul_acc(cache.h[j], block.conv_weights[0]->value, expect);
    matmul_acc(matmul(p, cache.h[j]), block.conv_weights[1]->value, expect);
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(out.out[j].data()[i], expect.data()[i], 1e-13);
  }
}
