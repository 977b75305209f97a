#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "uwct/losses.hpp"
#include "uwct/nets.hpp"
#include "uwct/oracles.hpp"

// Central finite differences (h = 1e-4, 64-bit) against reverse-mode
// gradients for every differentiable op and for a whole toy generator.
// Inputs are kept away from the kinks of relu/leaky_relu/abs.

using uwct::Rng;
using uwct::Tensor;
using uwct::oracles::grad_check;
using uwct::oracles::random_tensor;

using DTensor = Tensor<double>;
using Inputs = std::vector<DTensor>;

namespace {

constexpr double kTol = 1e-4;

// Weighted sum against fixed coefficients turns any op output into a scalar
// whose gradient exercises every output element.
DTensor weighted(const DTensor& y, uint64_t seed) {
  Rng rng(seed);
  DTensor coeffs = random_tensor(y.shape(), rng, -1.0, 1.0, false);
  return uwct::sum_all(uwct::mul(y, coeffs));
}

}  // namespace

TEST_CASE("gradcheck: elementwise ops") {
  Rng rng(42);
  const uwct::Shape shape{2, 3, 2};

  auto one_arg = [&](auto op, double lo, double hi, uint64_t tag) {
    auto result = grad_check(
        [op, tag](const Inputs& in) { return weighted(op(in[0]), tag); },
        {random_tensor(shape, rng, lo, hi)});
    CAPTURE(tag);
    CHECK(result.max_rel_error < kTol);
  };

  one_arg([](const DTensor& x) { return uwct::relu(x); }, 0.1, 2.0, 1);
  one_arg([](const DTensor& x) { return uwct::relu(x); }, -2.0, -0.1, 2);
  one_arg([](const DTensor& x) { return uwct::leaky_relu(x, 0.2); }, 0.1, 2.0, 3);
  one_arg([](const DTensor& x) { return uwct::leaky_relu(x, 0.2); }, -2.0, -0.1, 4);
  one_arg([](const DTensor& x) { return uwct::tanh_op(x); }, -2.0, 2.0, 5);
  one_arg([](const DTensor& x) { return uwct::sigmoid(x); }, -2.0, 2.0, 6);
  one_arg([](const DTensor& x) { return uwct::abs_op(x); }, 0.1, 2.0, 7);
  one_arg([](const DTensor& x) { return uwct::abs_op(x); }, -2.0, -0.1, 8);
  one_arg([](const DTensor& x) { return uwct::square(x); }, -2.0, 2.0, 9);
  one_arg([](const DTensor& x) { return uwct::log_op(x); }, 0.2, 3.0, 10);
  one_arg([](const DTensor& x) { return uwct::add_scalar(x, 1.7); }, -2.0, 2.0, 11);
  one_arg([](const DTensor& x) { return uwct::mul_scalar(x, -0.6); }, -2.0, 2.0, 12);
  one_arg([](const DTensor& x) { return uwct::clamp(x, -0.5, 0.5); }, -0.4, 0.4, 13);
}

TEST_CASE("gradcheck: binary ops") {
  Rng rng(43);
  const uwct::Shape shape{3, 4};
  auto two_arg = [&](auto op, double lo, double hi, uint64_t tag) {
    auto result = grad_check(
        [op, tag](const Inputs& in) { return weighted(op(in[0], in[1]), tag); },
        {random_tensor(shape, rng, lo, hi), random_tensor(shape, rng, lo, hi)});
    CAPTURE(tag);
    CHECK(result.max_rel_error < kTol);
  };
  two_arg([](const DTensor& a, const DTensor& b) { return uwct::add(a, b); }, -2, 2, 1);
  two_arg([](const DTensor& a, const DTensor& b) { return uwct::sub(a, b); }, -2, 2, 2);
  two_arg([](const DTensor& a, const DTensor& b) { return uwct::mul(a, b); }, -2, 2, 3);
  two_arg([](const DTensor& a, const DTensor& b) { return uwct::div(a, b); }, 0.5, 2, 4);
}

TEST_CASE("gradcheck: mean over axes") {
  Rng rng(44);
  auto result = grad_check(
      [](const Inputs& in) { return weighted(uwct::mean(in[0], {0, 2}), 21); },
      {random_tensor({2, 3, 4}, rng, -1, 1)});
  CHECK(result.max_rel_error < kTol);
  result = grad_check([](const Inputs& in) { return uwct::mean_all(in[0]); },
                      {random_tensor({2, 3, 4}, rng, -1, 1)});
  CHECK(result.max_rel_error < kTol);
}

TEST_CASE("gradcheck: pad_reflect") {
  Rng rng(45);
  auto result = grad_check(
      [](const Inputs& in) { return weighted(uwct::pad_reflect(in[0], 2), 31); },
      {random_tensor({1, 2, 4, 4}, rng, -1, 1)});
  CHECK(result.max_rel_error < kTol);
}

TEST_CASE("gradcheck: conv2d input and weight, zero and reflect padding") {
  Rng rng(46);
  for (int stride : {1, 2}) {
    auto result = grad_check(
        [stride](const Inputs& in) {
          return weighted(uwct::conv2d(in[0], in[1], stride, 1), 40 + stride);
        },
        {random_tensor({2, 2, 5, 5}, rng, -1, 1), random_tensor({3, 2, 3, 3}, rng, -1, 1)});
    CAPTURE(stride);
    CHECK(result.max_rel_error < kTol);
  }
  auto reflect = grad_check(
      [](const Inputs& in) {
        return weighted(uwct::conv2d(in[0], in[1], 1, 2, uwct::PadMode::Reflect), 49);
      },
      {random_tensor({1, 1, 5, 5}, rng, -1, 1), random_tensor({2, 1, 5, 5}, rng, -1, 1)});
  CHECK(reflect.max_rel_error < kTol);
}

TEST_CASE("gradcheck: conv_transpose2d input and weight") {
  Rng rng(47);
  for (int output_pad : {0, 1}) {
    auto result = grad_check(
        [output_pad](const Inputs& in) {
          return weighted(uwct::conv_transpose2d(in[0], in[1], 2, 1, output_pad),
                          50 + output_pad);
        },
        {random_tensor({1, 3, 4, 4}, rng, -1, 1), random_tensor({3, 2, 3, 3}, rng, -1, 1)});
    CAPTURE(output_pad);
    CHECK(result.max_rel_error < kTol);
  }
}

TEST_CASE("gradcheck: instance_norm against all three inputs") {
  Rng rng(48);
  auto result = grad_check(
      [](const Inputs& in) {
        return weighted(uwct::instance_norm(in[0], in[1], in[2], 1e-5), 61);
      },
      {random_tensor({2, 3, 3, 3}, rng, -2, 2), random_tensor({3}, rng, 0.5, 1.5),
       random_tensor({3}, rng, -0.5, 0.5)});
  CHECK(result.max_rel_error < kTol);
}

TEST_CASE("gradcheck: add_channel_bias") {
  Rng rng(49);
  auto result = grad_check(
      [](const Inputs& in) { return weighted(uwct::add_channel_bias(in[0], in[1]), 71); },
      {random_tensor({2, 3, 2, 2}, rng, -1, 1), random_tensor({3}, rng, -1, 1)});
  CHECK(result.max_rel_error < kTol);
}

TEST_CASE("gradcheck: ssim_loss and cycle_loss") {
  Rng rng(50);
  uwct::SsimParams ssim;
  ssim.window = 5;
  auto ssim_result = grad_check(
      [ssim](const Inputs& in) { return uwct::ssim_loss(in[0], in[1], ssim); },
      {random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9),
       random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9)});
  CHECK(ssim_result.max_rel_error < kTol);

  // Residuals bounded away from zero keep |.| differentiable where probed.
  auto cycle_result = grad_check(
      [](const Inputs& in) { return uwct::cycle_loss(in[0], in[1], in[2], in[3]); },
      {random_tensor({1, 2, 3, 3}, rng, -1.0, -0.3),
       random_tensor({1, 2, 3, 3}, rng, 0.3, 1.0),
       random_tensor({1, 2, 3, 3}, rng, 0.3, 1.0),
       random_tensor({1, 2, 3, 3}, rng, -1.0, -0.3)});
  CHECK(cycle_result.max_rel_error < kTol);
}

TEST_CASE("gradcheck: both least-squares adversarial terms") {
  Rng rng(51);
  auto g = grad_check([](const Inputs& in) { return uwct::adversarial_ls_g(in[0]); },
                      {random_tensor({1, 1, 4, 4}, rng, -1, 2)});
  CHECK(g.max_rel_error < kTol);
  auto d = grad_check(
      [](const Inputs& in) { return uwct::adversarial_ls_d(in[0], in[1]); },
      {random_tensor({1, 1, 4, 4}, rng, -1, 2), random_tensor({1, 1, 4, 4}, rng, -1, 2)});
  CHECK(d.max_rel_error < kTol);
}

TEST_CASE("gradcheck: adversarial_nll in the open interval") {
  Rng rng(52);
  auto result = grad_check(
      [](const Inputs& in) { return uwct::adversarial_nll(in[0], in[1]); },
      {random_tensor({1, 1, 3, 3}, rng, 0.1, 0.9),
       random_tensor({1, 1, 3, 3}, rng, 0.1, 0.9)});
  CHECK(result.max_rel_error < kTol);
}

TEST_CASE("gradcheck: full toy generator forward") {
  // Gradient against the input and every parameter of a small generator.
  Rng init_rng(53);
  uwct::ArchConfig arch;
  arch.preset = "toy";
  arch.base_width = 4;
  arch.disc_base_width = 4;
  arch.n_res_blocks = 1;
  uwct::GeneratorNet<double> net = uwct::GeneratorNet<double>::build(arch, init_rng);

  Rng data_rng(54);
  DTensor x = random_tensor({1, 3, 8, 8}, data_rng, -0.8, 0.8, true);

  Inputs leaves;
  leaves.push_back(x);
  for (const auto& t : net.param_tensors()) leaves.push_back(t);

  auto result = uwct::oracles::grad_check_inplace(
      [&] { return weighted(net.forward(x), 99); }, leaves);
  CHECK(result.max_rel_error < kTol);
  CHECK(result.checked > 500);
}
