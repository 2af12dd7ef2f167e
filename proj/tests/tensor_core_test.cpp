#include <gtest/gtest.h>

#include "sz3d/errors.hpp"
#include "sz3d/kernels.hpp"
#include "sz3d/reference_kernels.hpp"
#include "test_support.hpp"

using namespace sz3d;
using namespace sz3d::testing;

namespace {

ConvSpec random_conv_spec(Rng& rng) {
  ConvSpec s;
  for (int a = 0; a < 3; ++a) {
    s.kernel[a] = 1 + rng.below(3);
    s.stride[a] = 1 + rng.below(2);
    s.padding[a] = rng.below(s.kernel[a]);
  }
  return s;
}

}  // namespace

TEST(Tensor, SizeIsProductOfExtents) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(shape_numel({2, 3, 4}), 24u);
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Tensor, ExternalDataMustBeFinite) {
  EXPECT_THROW(Tensor::from_external({2}, {1.0, std::nan("")}), Error);
  EXPECT_THROW(Tensor::from_external({1}, {INFINITY}), Error);
  EXPECT_NO_THROW(Tensor::from_external({2}, {1.0, 2.0}));
}

TEST(Conv3d, ZeroInputGivesBias) {
  Rng rng(1);
  const Tensor x({2, 4, 5, 3}, 0.0);
  const Tensor w = random_tensor({3, 2, 3, 3, 3}, rng);
  const Tensor b({3}, {0.5, -1.0, 2.0});
  const Tensor y = kernels::conv3d_forward(x, w, b, ConvSpec{});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 4 * 5 * 3; ++i) EXPECT_EQ(y[c * 60 + i], b[c]);
}

TEST(Conv3d, IdentityKernelReproducesInput) {
  Rng rng(2);
  const Tensor x = random_tensor({1, 5, 4, 6}, rng);
  Tensor w({1, 1, 3, 3, 3}, 0.0);
  w.at({0, 0, 1, 1, 1}) = 1.0;
  const Tensor y = kernels::conv3d_forward(x, w, Tensor({1}, 0.0), ConvSpec{});
  EXPECT_EQ(y, x);

  const ConvGrads g = kernels::conv3d_backward(x, w, ConvSpec{}, Tensor(y.shape(), 1.0));
  for (double v : g.input.values()) EXPECT_EQ(v, 1.0);
}

TEST(Conv3d, MatchesDirectSumOracle) {
  Rng rng(3);
  const Tensor x = random_tensor({1, 4, 4, 4}, rng);
  const Tensor w = random_tensor({2, 1, 3, 3, 3}, rng);
  const Tensor b = random_tensor({2}, rng);
  const ConvSpec s{{3, 3, 3}, {1, 1, 1}, {0, 0, 0}};
  const Tensor y = kernels::conv3d_forward(x, w, b, s);
  const Tensor o = conv_oracle(x, w, b, s);
  ASSERT_EQ(y.shape(), o.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], o[i], 1e-12);
}

TEST(Conv3d, RandomizedShapesMatchOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 120; ++trial) {
    ConvSpec s = random_conv_spec(rng);
    const std::size_t C = 1 + rng.below(3), O = 1 + rng.below(3);
    Shape in{C, 0, 0, 0};
    for (int a = 0; a < 3; ++a) in[a + 1] = s.kernel[a] + rng.below(5);
    const Tensor x = random_tensor(in, rng);
    const Tensor w = random_tensor({O, C, s.kernel[0], s.kernel[1], s.kernel[2]}, rng);
    const Tensor b = random_tensor({O}, rng);
    const Tensor y = kernels::conv3d_forward(x, w, b, s);
    const Tensor o = conv_oracle(x, w, b, s);
    ASSERT_EQ(y.shape(), o.shape()) << "trial " << trial;
    for (int a = 0; a < 3; ++a)
      EXPECT_EQ(y.extent(a + 1), (in[a + 1] + 2 * s.padding[a] - s.kernel[a]) / s.stride[a] + 1);
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], o[i], 1e-12) << "trial " << trial;
  }
}

TEST(Conv3d, BatchedEqualsPerSample) {
  Rng rng(5);
  const Tensor x = random_tensor({3, 2, 5, 5, 5}, rng);
  const Tensor w = random_tensor({4, 2, 3, 3, 3}, rng);
  const Tensor b = random_tensor({4}, rng);
  const Tensor y = kernels::conv3d_forward(x, w, b, ConvSpec{});
  const std::size_t per = 2 * 125, out_per = 4 * 125;
  for (std::size_t n = 0; n < 3; ++n) {
    Tensor xn({2, 5, 5, 5}, std::vector<double>(x.values().begin() + n * per, x.values().begin() + (n + 1) * per));
    const Tensor yn = kernels::conv3d_forward(xn, w, b, ConvSpec{});
    for (std::size_t i = 0; i < out_per; ++i) EXPECT_EQ(y[n * out_per + i], yn[i]);
  }
}

TEST(Conv3d, ChannelMismatchIsShapeError) {
  const Tensor x({2, 4, 4, 4});
  const Tensor w({1, 3, 3, 3, 3});
  try {
    kernels::conv3d_forward(x, w, Tensor({1}), ConvSpec{});
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,4,4,4]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[1,3,3,3,3]"), std::string::npos) << msg;
  }
}

TEST(Conv3d, LinearInInputWithoutBias) {
  Rng rng(6);
  const Tensor x = random_tensor({2, 5, 4, 6}, rng), z = random_tensor({2, 5, 4, 6}, rng);
  const Tensor w = random_tensor({3, 2, 3, 3, 3}, rng);
  const Tensor b({3}, 0.0);
  const double alpha = 1.7, beta = -0.4;
  const Tensor lhs = kernels::conv3d_forward(kernels::add(kernels::scale(x, alpha), kernels::scale(z, beta)), w, b, ConvSpec{});
  const Tensor rhs = kernels::add(kernels::scale(kernels::conv3d_forward(x, w, b, ConvSpec{}), alpha),
                                  kernels::scale(kernels::conv3d_forward(z, w, b, ConvSpec{}), beta));
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-10);
}

TEST(Conv3d, DeterministicAcrossCalls) {
  Rng rng(7);
  const Tensor x = random_tensor({2, 2, 6, 6, 6}, rng);
  const Tensor w = random_tensor({4, 2, 3, 3, 3}, rng);
  const Tensor b = random_tensor({4}, rng);
  EXPECT_EQ(kernels::conv3d_forward(x, w, b, ConvSpec{}), kernels::conv3d_forward(x, w, b, ConvSpec{}));
}

TEST(Conv3dBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(8);
  const Tensor x = random_tensor({2, 4, 4, 4}, rng);
  const Tensor w = random_tensor({3, 2, 3, 3, 3}, rng);
  const ConvGrads g = kernels::conv3d_backward(x, w, ConvSpec{}, Tensor({3, 4, 4, 4}, 0.0));
  for (const Tensor* t : {&g.input, &g.kernels, &g.bias})
    for (double v : t->values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv3dBackward, SumLossKernelGradIsWindowSum) {
  Rng rng(9);
  const Tensor x = random_tensor({1, 3, 3, 3}, rng);
  const Tensor w = random_tensor({1, 1, 2, 2, 2}, rng);
  const ConvSpec s{{2, 2, 2}, {1, 1, 1}, {0, 0, 0}};
  const ConvGrads g = kernels::conv3d_backward(x, w, s, Tensor({1, 2, 2, 2}, 1.0));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        double window_sum = 0;
        for (std::size_t z = 0; z < 2; ++z)
          for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t q = 0; q < 2; ++q) window_sum += x.at({0, z + i, r + j, q + k});
        EXPECT_NEAR(g.kernels.at({0, 0, i, j, k}), window_sum, 1e-12);
      }
  Tensor wv = w;
  const auto loss = [&] {
    const Tensor y = kernels::conv3d_forward(x, wv, Tensor({1}, 0.0), s);
    double sum = 0;
    for (double v : y.values()) sum += v;
    return sum;
  };
  for (std::size_t i = 0; i < wv.size(); ++i)
    EXPECT_LT(relative_error(g.kernels[i], central_difference(loss, wv[i])), 1e-6);
  EXPECT_DOUBLE_EQ(g.bias[0], 8.0);
}

TEST(Conv3dBackward, FiniteDifferencesOnRandomSpecs) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvSpec s = random_conv_spec(rng);
    const std::size_t C = 1 + rng.below(2), O = 1 + rng.below(2);
    Shape in{C, 0, 0, 0};
    for (int a = 0; a < 3; ++a) in[a + 1] = s.kernel[a] + rng.below(3);
    Tensor x = random_tensor(in, rng);
    Tensor w = random_tensor({O, C, s.kernel[0], s.kernel[1], s.kernel[2]}, rng);
    Tensor b = random_tensor({O}, rng);
    const Tensor y = kernels::conv3d_forward(x, w, b, s);
    const Tensor r = random_tensor(y.shape(), rng);
    const ConvGrads g = kernels::conv3d_backward(x, w, s, r);
    const auto loss = [&] { return weighted_sum(kernels::conv3d_forward(x, w, b, s), r); };
    for (std::size_t i = 0; i < x.size(); ++i)
      ASSERT_LT(relative_error(g.input[i], central_difference(loss, x[i])), 1e-6) << "trial " << trial;
    for (std::size_t i = 0; i < w.size(); ++i)
      ASSERT_LT(relative_error(g.kernels[i], central_difference(loss, w[i])), 1e-6) << "trial " << trial;
    for (std::size_t i = 0; i < b.size(); ++i)
      ASSERT_LT(relative_error(g.bias[i], central_difference(loss, b[i])), 1e-6) << "trial " << trial;
  }
}

TEST(Conv3dBackward, ShapeMismatchIsShapeError) {
  const Tensor x({1, 4, 4, 4});
  const Tensor w({1, 1, 3, 3, 3});
  EXPECT_THROW(kernels::conv3d_backward(x, w, ConvSpec{}, Tensor({1, 3, 4, 4})), ShapeError);
}

TEST(MaxPool3d, ConstantInputGivesConstantOutput) {
  const Tensor x({2, 6, 6, 6}, 0.25);
  const auto [y, map] = kernels::maxpool3d_forward(x, PoolSpec{});
  for (double v : y.values()) EXPECT_EQ(v, 0.25);
  // ties resolve to the lowest flat index: the window's first voxel
  EXPECT_EQ(map.argmax[0], 0u);
}

TEST(MaxPool3d, EnumeratedMaximum) {
  Tensor x({1, 2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) x[i] = static_cast<double>(i);
  const auto [y, map] = kernels::maxpool3d_forward(x, PoolSpec{});
  ASSERT_EQ(y.size(), 1u);
  EXPECT_EQ(y[0], 7.0);
  EXPECT_EQ(map.argmax[0], 7u);
}

TEST(MaxPool3d, MatchesWindowOracle) {
  Rng rng(11);
  const Tensor x = random_tensor({2, 5, 5, 5}, rng);
  const PoolSpec s{{3, 3, 3}, {2, 2, 2}, {0, 0, 0}};
  const auto [y, map] = kernels::maxpool3d_forward(x, s);
  const PoolOracle o = pool_oracle(x, s);
  EXPECT_EQ(y, o.output);
  EXPECT_EQ(map.argmax, o.argmax);
}

TEST(MaxPool3d, RandomizedConfigsMatchOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 120; ++trial) {
    PoolSpec s;
    for (int a = 0; a < 3; ++a) {
      s.window[a] = 1 + rng.below(3);
      s.stride[a] = 1 + rng.below(3);
      s.padding[a] = rng.below((s.window[a] + 1) / 2);
    }
    Shape in{1 + rng.below(2), 0, 0, 0};
    for (int a = 0; a < 3; ++a) in[a + 1] = s.window[a] + rng.below(4);
    // integer-valued input forces plenty of ties
    Tensor x = random_tensor(in, rng);
    if (trial % 2 == 0)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::floor(3 * x[i]);
    const auto [y, map] = kernels::maxpool3d_forward(x, s);
    const PoolOracle o = pool_oracle(x, s);
    ASSERT_EQ(y, o.output) << "trial " << trial;
    ASSERT_EQ(map.argmax, o.argmax) << "trial " << trial;
  }
}

TEST(MaxPool3d, IndexMapPointsInsideWindow) {
  Rng rng(13);
  const Tensor x = random_tensor({1, 7, 6, 5}, rng);
  const PoolSpec s{{3, 2, 2}, {2, 1, 2}, {0, 0, 0}};
  const auto [y, map] = kernels::maxpool3d_forward(x, s);
  const std::size_t Ho = y.extent(2), Wo = y.extent(3);
  for (std::size_t o = 0; o < map.argmax.size(); ++o) {
    const std::size_t z = o / (Ho * Wo), r = (o / Wo) % Ho, q = o % Wo;
    const std::size_t a = map.argmax[o];
    const std::size_t zi = a / 30, ri = (a / 5) % 6, qi = a % 5;
    EXPECT_TRUE(zi >= 2 * z && zi < 2 * z + 3);
    EXPECT_TRUE(ri >= r && ri < r + 2);
    EXPECT_TRUE(qi >= 2 * q && qi < 2 * q + 2);
  }
}

TEST(MaxPool3d, WindowLargerThanInputIsShapeError) {
  EXPECT_THROW(kernels::maxpool3d_forward(Tensor({1, 2, 4, 4}), PoolSpec{{3, 3, 3}, {1, 1, 1}, {0, 0, 0}}),
               ShapeError);
}

TEST(MaxPool3dBackward, OnePerNonOverlappingWindow) {
  Rng rng(14);
  const Tensor x = random_tensor({1, 4, 4, 4}, rng);
  const auto [y, map] = kernels::maxpool3d_forward(x, PoolSpec{});
  const Tensor g = kernels::maxpool3d_backward(Tensor(y.shape(), 1.0), map, x.shape());
  double total = 0;
  for (double v : g.values()) {
    EXPECT_TRUE(v == 0.0 || v == 1.0);
    total += v;
  }
  EXPECT_EQ(total, 8.0);
  const Tensor zero = kernels::maxpool3d_backward(Tensor(y.shape(), 0.0), map, x.shape());
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST(MaxPool3dBackward, OverlappingWindowsFiniteDifferences) {
  Rng rng(15);
  Tensor x = random_tensor({2, 5, 5, 5}, rng);
  const PoolSpec s{{3, 3, 3}, {1, 2, 1}, {0, 0, 0}};
  const auto [y, map] = kernels::maxpool3d_forward(x, s);
  const Tensor r = random_tensor(y.shape(), rng);
  const Tensor g = kernels::maxpool3d_backward(r, map, x.shape());
  const auto loss = [&] { return weighted_sum(kernels::maxpool3d_forward(x, s).first, r); };
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT(relative_error(g[i], central_difference(loss, x[i])), 1e-6) << i;
}

TEST(MaxPool3dBackward, CorruptIndexMapIsConsistencyError) {
  const Tensor x({1, 2, 2, 2});
  auto [y, map] = kernels::maxpool3d_forward(x, PoolSpec{});
  map.argmax[0] = 99;
  EXPECT_THROW(kernels::maxpool3d_backward(Tensor(y.shape(), 1.0), map, x.shape()), ConsistencyError);
}

TEST(Matmul, HandCheckable) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 1}, {1, 1});
  EXPECT_EQ(kernels::matmul(a, b), Tensor({2, 1}, {3, 7}));
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(kernels::matmul(eye, a), a);
  EXPECT_THROW(kernels::matmul(a, Tensor({3, 1})), ShapeError);
}

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(16);
  const Tensor a = random_tensor({7, 5}, rng), b = random_tensor({5, 3}, rng);
  const Tensor c = kernels::matmul(a, b);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 5; ++k) s += a.at({i, k}) * b.at({k, j});
      EXPECT_NEAR(c.at({i, j}), s, 1e-12);
    }
}

TEST(Elementwise, AddScaleConcat) {
  Rng rng(17);
  const Tensor a = random_tensor({2, 3, 3, 3}, rng);
  EXPECT_EQ(kernels::add(a, Tensor(a.shape(), 0.0)), a);
  EXPECT_THROW(kernels::add(a, Tensor({2, 3, 3, 2})), ShapeError);
  const Tensor s = kernels::scale(a, -2.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(s[i], -2.0 * a[i]);

  const Tensor b = random_tensor({3, 3, 3, 3}, rng);
  const std::vector<Tensor> parts{a, b};
  const Tensor c = kernels::concat_channels(parts);
  EXPECT_EQ(c.shape(), (Shape{5, 3, 3, 3}));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(c[i], a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(c[a.size() + i], b[i]);
  const std::vector<Tensor> bad{a, Tensor({1, 3, 3, 2})};
  EXPECT_THROW(kernels::concat_channels(bad), ShapeError);
}

TEST(Elementwise, ConcatBackwardSplitsGradient) {
  Rng rng(18);
  std::vector<Tensor> parts{random_tensor({2, 1, 2, 3, 3}, rng), random_tensor({2, 3, 2, 3, 3}, rng)};
  const Tensor y = kernels::concat_channels(parts);
  const Tensor r = random_tensor(y.shape(), rng);
  const std::vector<std::size_t> channels{1, 3};
  const auto grads = kernels::split_channels(r, channels);
  const auto loss = [&] { return weighted_sum(kernels::concat_channels(parts), r); };
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < parts[p].size(); ++i)
      EXPECT_LT(relative_error(grads[p][i], central_difference(loss, parts[p][i])), 1e-6);
}

TEST(ReferenceKernels, AgreeWithProduction) {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvSpec s = random_conv_spec(rng);
    Shape in{2, 2, 0, 0, 0};
    for (int a = 0; a < 3; ++a) in[a + 2] = s.kernel[a] + rng.below(4);
    const Tensor x = random_tensor(in, rng);
    const Tensor w = random_tensor({3, 2, s.kernel[0], s.kernel[1], s.kernel[2]}, rng);
    const Tensor b = random_tensor({3}, rng);
    const Tensor y = kernels::conv3d_forward(x, w, b, s);
    const Tensor yr = reference::conv3d_forward(x, w, b, s);
    ASSERT_EQ(y.shape(), yr.shape());
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], yr[i], 1e-12);
    const Tensor r = random_tensor(y.shape(), rng);
    const ConvGrads g = kernels::conv3d_backward(x, w, s, r);
    const ConvGrads gr = reference::conv3d_backward(x, w, s, r);
    for (std::size_t i = 0; i < g.input.size(); ++i) ASSERT_NEAR(g.input[i], gr.input[i], 1e-12);
    for (std::size_t i = 0; i < g.kernels.size(); ++i) ASSERT_NEAR(g.kernels[i], gr.kernels[i], 1e-12);
    for (std::size_t i = 0; i < g.bias.size(); ++i) ASSERT_NEAR(g.bias[i], gr.bias[i], 1e-12);

    const PoolSpec p{{2, 2, 2}, {1 + rng.below(2), 2, 1}, {0, 0, 0}};
    if (x.extent(2) >= 2 && x.extent(3) >= 2 && x.extent(4) >= 2) {
      const auto [py, pm] = kernels::maxpool3d_forward(x, p);
      const auto [pyr, pmr] = reference::maxpool3d_forward(x, p);
      ASSERT_EQ(py, pyr);
      ASSERT_EQ(pm.argmax, pmr.argmax);
      const Tensor pr = random_tensor(py.shape(), rng);
      ASSERT_EQ(kernels::maxpool3d_backward(pr, pm, x.shape()), reference::maxpool3d_backward(pr, pmr, x.shape()));
    }
  }
  const Tensor xin = random_tensor({4, 9}, rng), w = random_tensor({5, 9}, rng), b = random_tensor({5}, rng);
  const Tensor d = kernels::dense_forward(xin, w, b), dr = reference::dense_forward(xin, w, b);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], dr[i], 1e-12);
}

TEST(ShapeAlgebra, OutputExtentLaw) {
  Rng rng(20);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t in = 1 + rng.below(40), k = 1 + rng.below(6), s = 1 + rng.below(4), p = rng.below(4);
    const std::size_t expected = in + 2 * p >= k ? (in + 2 * p - k) / s + 1 : 0;
    EXPECT_EQ(output_extent(in, k, s, p), expected);
  }
}
