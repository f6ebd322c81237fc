#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tandem/tensor.hpp"

namespace tandem {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_row = -1;
    int worst_col = -1;
    double analytic = 0.0;
    double numeric = 0.0;

    std::string describe() const;
};

/// Scalar objective over a flat list of parameter tensors. Must be
/// deterministic: two calls on equal inputs return the same value.
using ValueFn = std::function<double(std::span<const Tensor>)>;

/// Central-difference check of `analytic_grads` against (f(p+eps)-f(p-eps))/2eps,
/// coordinate by coordinate over every tensor. Reports the worst relative
/// error and where it happened; never throws on disagreement.
///
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-3): at the
/// gradient scales this project produces, anything a broken backward rule
/// could cause lands far above 1e-4 while central-difference truncation
/// noise stays far below it.
GradCheckResult finite_diff_check(const ValueFn& f,
                                  const std::vector<Tensor>& params,
                                  const std::vector<std::string>& names,
                                  const std::vector<Tensor>& analytic_grads,
                                  double eps = 1e-3,
                                  bool parallel = true,
                                  std::vector<double>* per_tensor_max = nullptr);

}  // namespace tandem
