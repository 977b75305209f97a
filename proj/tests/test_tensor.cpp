#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uwct/ops.hpp"
#include "uwct/oracles.hpp"
#include "uwct/tensor.hpp"

using uwct::PadMode;
using uwct::Shape;
using uwct::Tensor;

namespace {

template <typename T>
void check_values(const Tensor<T>& t, const std::vector<T>& expected, double tol = 1e-12) {
  REQUIRE(t.numel() == static_cast<int64_t>(expected.size()));
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(t.values()[i] == doctest::Approx(expected[i]).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("tensor construction checks shape against data size") {
  CHECK_THROWS(Tensor<double>::from_vector({2, 2}, {1.0, 2.0, 3.0}));
  Tensor<double> t = Tensor<double>::from_vector({2, 2}, {1, 2, 3, 4});
  CHECK(t.numel() == 4);
  CHECK(t.shape() == Shape{2, 2});
}

TEST_CASE("conv2d identity kernel reproduces the input") {
  Tensor<double> x = Tensor<double>::from_vector({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor<double> k = Tensor<double>::full({1, 1, 1, 1}, 1.0);
  check_values(uwct::conv2d(x, k, 1, 0), {1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("conv2d matches the direct summation oracle") {
  // [[1,2],[3,4]] against [[1,0],[0,1]]: 1*1 + 4*1 = 5.
  Tensor<double> x = Tensor<double>::from_vector({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor<double> k = Tensor<double>::from_vector({1, 1, 2, 2}, {1, 0, 0, 1});
  Tensor<double> out = uwct::conv2d(x, k, 1, 0);
  CHECK(out.shape() == Shape{1, 1, 1, 1});
  CHECK(out.item() == doctest::Approx(5.0));
}

TEST_CASE("conv2d shape arithmetic for the 256 stride-2 case") {
  Tensor<float> x = Tensor<float>::zeros({1, 3, 256, 256});
  Tensor<float> k = Tensor<float>::zeros({64, 3, 4, 4});
  CHECK(uwct::conv2d(x, k, 2, 1).shape() == Shape{1, 64, 128, 128});
}

TEST_CASE("conv2d rejects mismatched channels naming both shapes") {
  Tensor<double> x = Tensor<double>::zeros({1, 2, 4, 4});
  Tensor<double> k = Tensor<double>::zeros({1, 3, 3, 3});
  CHECK_THROWS_WITH_AS(uwct::conv2d(x, k, 1, 0),
                       doctest::Contains("[1,2,4,4]"), std::invalid_argument);
  CHECK_THROWS_AS(uwct::conv2d(Tensor<double>::zeros({1, 1, 2, 2}),
                               Tensor<double>::zeros({1, 1, 5, 5}), 1, 0),
                  std::invalid_argument);
}

TEST_CASE("conv_transpose2d scatter-add oracle") {
  Tensor<double> x = Tensor<double>::full({1, 1, 1, 1}, 2.0);
  Tensor<double> k = Tensor<double>::full({1, 1, 2, 2}, 1.0);
  Tensor<double> out = uwct::conv_transpose2d(x, k, 2, 0, 0);
  CHECK(out.shape() == Shape{1, 1, 2, 2});
  check_values(out, {2, 2, 2, 2});
}

TEST_CASE("conv_transpose2d output extent follows the closed form") {
  CHECK(uwct::conv_transpose_out_extent(64, 3, 2, 1, 0) == 127);
  CHECK(uwct::conv_transpose_out_extent(64, 3, 2, 1, 1) == 128);
  Tensor<float> x = Tensor<float>::zeros({1, 4, 64, 64});
  Tensor<float> k = Tensor<float>::zeros({4, 2, 3, 3});
  CHECK(uwct::conv_transpose2d(x, k, 2, 1, 1).shape() == Shape{1, 2, 128, 128});
}

TEST_CASE("conv_transpose2d of zero input is zero") {
  Tensor<double> x = Tensor<double>::zeros({1, 2, 3, 3});
  Tensor<double> k = Tensor<double>::full({2, 1, 2, 2}, 3.0);
  for (double v : uwct::conv_transpose2d(x, k, 2, 0, 0).values()) CHECK(v == 0.0);
}

TEST_CASE("instance_norm closed-form case") {
  // Channel [0,0,1,1]: mean 0.5, population std 0.5.
  Tensor<double> x = Tensor<double>::from_vector({1, 1, 2, 2}, {0, 0, 1, 1});
  Tensor<double> gamma = Tensor<double>::full({1}, 1.0);
  Tensor<double> beta = Tensor<double>::zeros({1});
  Tensor<double> out = uwct::instance_norm(x, gamma, beta, 1e-12);
  check_values(out, {-1, -1, 1, 1}, 1e-6);
}

TEST_CASE("instance_norm of a constant channel is zero; gamma=0 gives beta") {
  Tensor<double> x = Tensor<double>::full({1, 2, 3, 3}, 0.37);
  Tensor<double> gamma = Tensor<double>::full({2}, 1.0);
  Tensor<double> beta = Tensor<double>::zeros({2});
  for (double v : uwct::instance_norm(x, gamma, beta, 1e-5).values()) {
    CHECK(v == doctest::Approx(0.0));
  }
  Tensor<double> x2 = Tensor<double>::from_vector({1, 1, 2, 2}, {0.1, 0.9, -3, 5});
  Tensor<double> g0 = Tensor<double>::zeros({1});
  Tensor<double> bc = Tensor<double>::full({1}, 4.2);
  for (double v : uwct::instance_norm(x2, g0, bc, 1e-5).values()) {
    CHECK(v == doctest::Approx(4.2));
  }
}

TEST_CASE("elementwise trivial values") {
  Tensor<double> x = Tensor<double>::from_vector({3}, {-1.0, 0.0, 2.0});
  check_values(uwct::leaky_relu(x, 0.2), {-0.2, 0.0, 2.0});
  check_values(uwct::relu(x), {0.0, 0.0, 2.0});
  CHECK(uwct::tanh_op(Tensor<double>::zeros({1})).item() == 0.0);
  CHECK(uwct::mean_all(Tensor<double>::from_vector({4}, {1, 2, 3, 4})).item() ==
        doctest::Approx(2.5));
  check_values(uwct::abs_op(x), {1.0, 0.0, 2.0});
  check_values(uwct::square(x), {1.0, 0.0, 4.0});
}

TEST_CASE("mean over an empty axis set is the identity") {
  Tensor<double> x = Tensor<double>::from_vector({2, 2}, {1, 2, 3, 4});
  Tensor<double> same = uwct::mean(x, std::span<const int>{});
  CHECK(same.node() == x.node());
}

TEST_CASE("mean over selected axes") {
  Tensor<double> x = Tensor<double>::from_vector({2, 3}, {1, 2, 3, 4, 5, 6});
  check_values(uwct::mean(x, {1}), {2.0, 5.0});
  check_values(uwct::mean(x, {0}), {2.5, 3.5, 4.5});
  Tensor<double> all = uwct::mean(x, {0, 1});
  CHECK(all.shape() == Shape{1});
  CHECK(all.item() == doctest::Approx(3.5));
}

TEST_CASE("pad_reflect mirrors without repeating the edge") {
  Tensor<double> x = Tensor<double>::from_vector({1, 1, 1, 3}, {1, 2, 3});
  Tensor<double>* unused = &x;
  (void)unused;
  CHECK_THROWS(uwct::pad_reflect(x, 1));  // height 1 cannot reflect by 1
  Tensor<double> x2 = Tensor<double>::from_vector({1, 1, 3, 3},
                                                  {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor<double> padded = uwct::pad_reflect(x2, 1);
  CHECK(padded.shape() == Shape{1, 1, 5, 5});
  // row -1 reflects to row 1, column -1 to column 1.
  CHECK(padded.values()[0] == 5.0);
  CHECK(padded.values()[1] == 4.0);
  CHECK(padded.values()[6] == 1.0);
}

TEST_CASE("backward of sum(w*x) with x fixed gives grad(w) = x") {
  Tensor<double> w = Tensor<double>::from_vector({3}, {0.5, -1.0, 2.0}, true);
  Tensor<double> x = Tensor<double>::from_vector({3}, {3.0, 4.0, 5.0});
  uwct::sum_all(uwct::mul(w, x)).backward();
  REQUIRE(w.grad().size() == 3);
  CHECK(w.grad()[0] == doctest::Approx(3.0));
  CHECK(w.grad()[1] == doctest::Approx(4.0));
  CHECK(w.grad()[2] == doctest::Approx(5.0));
}

TEST_CASE("backward of mean((a-b)^2)") {
  // a=[1,2], b=[0,0]: d/da mean = 2(a-b)/n = [1, 2].
  Tensor<double> a = Tensor<double>::from_vector({2}, {1.0, 2.0}, true);
  Tensor<double> b = Tensor<double>::zeros({2});
  uwct::mean_all(uwct::square(uwct::sub(a, b))).backward();
  CHECK(a.grad()[0] == doctest::Approx(1.0));
  CHECK(a.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tensor<double> a = Tensor<double>::from_vector({2}, {1.0, 2.0}, true);
  Tensor<double> y = uwct::square(a);
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);
}

TEST_CASE("calling backward twice doubles every gradient exactly") {
  Tensor<double> a = Tensor<double>::from_vector({2, 2}, {0.3, -0.7, 1.1, 2.0}, true);
  Tensor<double> loss = uwct::mean_all(uwct::square(uwct::tanh_op(a)));
  loss.backward();
  std::vector<double> once(a.grad().begin(), a.grad().end());
  loss.backward();
  for (size_t i = 0; i < once.size(); ++i) {
    CHECK(a.grad()[i] == 2.0 * once[i]);
  }
  a.zero_grad();
  loss.backward();
  for (size_t i = 0; i < once.size(); ++i) {
    CHECK(a.grad()[i] == once[i]);
  }
}

TEST_CASE("gradients accumulate across different graphs sharing a leaf") {
  Tensor<double> a = Tensor<double>::from_vector({1}, {2.0}, true);
  uwct::sum_all(uwct::square(a)).backward();        // d/da a^2 = 4
  uwct::sum_all(uwct::mul_scalar(a, 3.0)).backward();  // +3
  CHECK(a.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("detach cuts the graph") {
  Tensor<double> a = Tensor<double>::from_vector({2}, {1.0, 2.0}, true);
  Tensor<double> d = uwct::square(a).detach();
  CHECK_FALSE(d.needs_grad());
  uwct::sum_all(uwct::square(d)).backward();
  CHECK(a.grad().empty());
}

TEST_CASE("identical graphs evaluate to bitwise identical results") {
  auto build = [] {
    uwct::Rng rng(11);
    Tensor<double> x = uwct::oracles::random_tensor({1, 2, 8, 8}, rng, -1, 1, false);
    Tensor<double> k = uwct::oracles::random_tensor({3, 2, 3, 3}, rng, -1, 1, false);
    Tensor<double> y = uwct::conv2d(x, k, 2, 1);
    return uwct::mean_all(uwct::tanh_op(y)).item();
  };
  const double a = build();
  const double b = build();
  CHECK(a == b);
}

TEST_CASE("checked mode flags non-finite op results") {
  uwct::set_check_finite(true);
  Tensor<double> big = Tensor<double>::full({2}, 1e308);
  CHECK_THROWS_AS((void)uwct::square(big), std::runtime_error);
  uwct::set_check_finite(false);
  CHECK_NOTHROW((void)uwct::square(big));
}

TEST_CASE("channel slice and concat round trip") {
  Tensor<double> x = Tensor<double>::from_vector({1, 3, 1, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tensor<double> r = uwct::channel_slice(x, 0, 1);
  Tensor<double> gb = uwct::channel_slice(x, 1, 2);
  check_values(r, {1, 2});
  check_values(gb, {3, 4, 5, 6});
  std::vector<Tensor<double>> parts{r, gb};
  Tensor<double> back = uwct::concat_channels(std::span<const Tensor<double>>(parts));
  check_values(back, {1, 2, 3, 4, 5, 6});
  uwct::sum_all(back).backward();
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("luminance weights follow BT.601") {
  Tensor<double> x = Tensor<double>::from_vector({1, 3, 1, 1}, {1.0, 1.0, 1.0});
  CHECK(uwct::luminance(x).item() == doctest::Approx(1.0));
  Tensor<double> red = Tensor<double>::from_vector({1, 3, 1, 1}, {1.0, 0.0, 0.0});
  CHECK(uwct::luminance(red).item() == doctest::Approx(0.299));
}
