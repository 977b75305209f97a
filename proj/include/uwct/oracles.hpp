#pragma once

#include <functional>
#include <vector>

#include "uwct/losses.hpp"
#include "uwct/rng.hpp"
#include "uwct/tensor.hpp"

// Independent reference implementations used to check the main computation
// paths. Everything here is deliberately naive and shares no code with the
// implementations under test.
namespace uwct::oracles {

// Per-pixel SSIM by direct double loops over every patch, with the same
// reflect border convention and uniform patch statistics as ssim_map.
// Inputs are N1HW in [0, 1].
std::vector<double> ssim_map_reference(const std::vector<double>& x,
                                       const std::vector<double>& y, int64_t height,
                                       int64_t width, const SsimParams& params);

// Central finite differences of a scalar-valued function at `point`.
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& fn,
    const std::vector<double>& point, double step);

// max_i |a_i - f_i| / max(1, |a_i|, |f_i|)
double max_relative_error(const std::vector<double>& analytic,
                          const std::vector<double>& numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  size_t checked = 0;
};

// Checks d(loss)/d(inputs[k]) for every k against central differences.
// `loss` must rebuild the graph from the given leaves on every call.
GradCheckResult grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& loss,
    const std::vector<Tensor<double>>& inputs, double step = 1e-4);

// Same check for graphs that close over their leaves (networks): finite
// differences perturb each leaf in place and `loss` re-evaluates from the
// current leaf values.
GradCheckResult grad_check_inplace(const std::function<Tensor<double>()>& loss,
                                   const std::vector<Tensor<double>>& leaves,
                                   double step = 1e-4);

// Scalar ADAM recurrence written out longhand: m, v, bias correction and the
// update, one value at a time.
std::vector<double> adam_scalar_recurrence(double theta0, const std::vector<double>& grads,
                                           double lr, double beta1, double beta2,
                                           double epsilon);

// Uniform tensor filler for randomized checks, values in [lo, hi].
Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo, double hi,
                             bool requires_grad = true);

}  // namespace uwct::oracles
