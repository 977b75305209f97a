#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "uwct/adam.hpp"
#include "uwct/ops.hpp"
#include "uwct/oracles.hpp"
#include "uwct/rng.hpp"

using uwct::AdamConfig;
using uwct::AdamOptimizer;
using uwct::Rng;
using uwct::Tensor;

TEST_CASE("adam first step moves by about -lr for unit gradient") {
  // m_hat = g, v_hat = g^2, so the first update is -lr * g/(|g| + eps).
  std::vector<double> theta{0.0}, m{0.0}, v{0.0};
  std::vector<double> grad{1.0};
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  uwct::adam_update<double>(theta, grad, m, v, 1, cfg);
  CHECK(theta[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam leaves parameters unchanged for zero gradient on fresh state") {
  Tensor<double> p = Tensor<double>::from_vector({3}, {1.0, -2.0, 0.5}, true);
  AdamOptimizer<double> opt({p}, AdamConfig{0.01, 0.9, 0.999, 1e-8});
  opt.step();  // no backward has run; gradient treated as zero
  CHECK(p.values()[0] == 1.0);
  CHECK(p.values()[1] == -2.0);
  CHECK(p.values()[2] == 0.5);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam matches the scalar recurrence oracle over 10 steps to 1e-12") {
  const double lr = 0.0002, beta1 = 0.5, beta2 = 0.999, eps = 1e-8;
  std::vector<double> grads;
  Rng rng(17);
  for (int i = 0; i < 10; ++i) grads.push_back(rng.next_double() * 4 - 2);
  const std::vector<double> expected =
      uwct::oracles::adam_scalar_recurrence(0.3, grads, lr, beta1, beta2, eps);

  std::vector<double> theta{0.3}, m{0.0}, v{0.0};
  AdamConfig cfg{lr, beta1, beta2, eps};
  for (size_t t = 1; t <= grads.size(); ++t) {
    std::vector<double> g{grads[t - 1]};
    uwct::adam_update<double>(theta, g, m, v, t, cfg);
    CHECK(std::abs(theta[0] - expected[t - 1]) < 1e-12);
  }
}

TEST_CASE("adam two constant-gradient steps reproduce the recurrence") {
  const std::vector<double> grads{0.7, 0.7};
  const auto expected = uwct::oracles::adam_scalar_recurrence(1.0, grads, 0.05, 0.5,
                                                              0.999, 1e-8);
  std::vector<double> theta{1.0}, m{0.0}, v{0.0};
  AdamConfig cfg{0.05, 0.5, 0.999, 1e-8};
  for (size_t t = 1; t <= 2; ++t) {
    std::vector<double> g{0.7};
    uwct::adam_update<double>(theta, g, m, v, t, cfg);
  }
  CHECK(std::abs(theta[0] - expected[1]) < 1e-12);
}

TEST_CASE("adam config validation rejects bad hyperparameters") {
  CHECK_THROWS(AdamConfig{0.0, 0.5, 0.999, 1e-8}.validate());
  CHECK_THROWS(AdamConfig{-1.0, 0.5, 0.999, 1e-8}.validate());
  CHECK_THROWS(AdamConfig{0.1, 1.0, 0.999, 1e-8}.validate());
  CHECK_THROWS(AdamConfig{0.1, 0.5, 0.999, 0.0}.validate());
  CHECK_NOTHROW(AdamConfig{}.validate());
}

TEST_CASE("optimizer steps through tensor gradients") {
  Tensor<double> w = Tensor<double>::from_vector({2}, {1.0, 2.0}, true);
  AdamOptimizer<double> opt({w}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  uwct::sum_all(uwct::square(w)).backward();  // grad = 2w = [2, 4]
  opt.step();
  CHECK(w.values()[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-5));
  CHECK(w.values()[1] == doctest::Approx(2.0 - 0.1).epsilon(1e-5));
  opt.zero_grad();
  CHECK(w.grad()[0] == 0.0);
}

TEST_CASE("same seed gives bitwise identical draw sequences") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(123), d(124);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) any_diff = any_diff || (c.next_u64() != d.next_u64());
  CHECK(any_diff);
}

TEST_CASE("normal_init is seed-deterministic and seed-sensitive") {
  Tensor<float> a = Tensor<float>::zeros({64});
  Tensor<float> b = Tensor<float>::zeros({64});
  Tensor<float> c = Tensor<float>::zeros({64});
  Rng r1(7), r2(7), r3(8);
  uwct::normal_init(a, r1, 0.0f, 0.02f);
  uwct::normal_init(b, r2, 0.0f, 0.02f);
  uwct::normal_init(c, r3, 0.0f, 0.02f);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    all_equal = all_equal && (a.values()[i] == b.values()[i]);
    any_diff = any_diff || (a.values()[i] != c.values()[i]);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("sample mean of 1e5 normal draws is within the CLT bound") {
  Rng rng(2718);
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += 0.02 * rng.next_normal();
  const double mean = acc / n;
  const double bound = 3.0 * 0.02 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean) < bound);
}

TEST_CASE("normal draw distribution second moment is sane") {
  Rng rng(999);
  const int n = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng state save/load round trip") {
  Rng rng(55);
  rng.next_normal();  // leave a cached value behind
  std::ostringstream out;
  rng.save(out);
  Rng restored;
  std::istringstream in(out.str());
  restored.load(in);
  CHECK(restored == rng);
  for (int i = 0; i < 8; ++i) {
    CHECK(restored.next_normal() == rng.next_normal());
  }
}

TEST_CASE("rng streams are independent per id") {
  Rng a = Rng::stream(1, 1);
  Rng b = Rng::stream(1, 2);
  CHECK(a.next_u64() != b.next_u64());
}
