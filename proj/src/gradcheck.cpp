#include "tandem/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tandem/parallel.hpp"

namespace tandem {

std::string GradCheckResult::describe() const {
    if (worst_param.empty()) return "max rel err 0 (no coordinates)";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "max rel err %.3e at %s[%d,%d] (analytic %.9g, central diff %.9g)",
                  max_rel_err, worst_param.c_str(), worst_row, worst_col, analytic, numeric);
    return buf;
}

GradCheckResult finite_diff_check(const ValueFn& f,
                                  const std::vector<Tensor>& params,
                                  const std::vector<std::string>& names,
                                  const std::vector<Tensor>& analytic_grads,
                                  double eps,
                                  bool parallel,
                                  std::vector<double>* per_tensor_max) {
    if (eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be positive");
    if (params.size() != names.size() || params.size() != analytic_grads.size()) {
        throw std::invalid_argument("finite_diff_check: params/names/grads size mismatch");
    }

    // Flatten coordinates so blocks of them can be evaluated independently.
    struct Coord {
        std::size_t tensor;
        std::size_t offset;
    };
    std::vector<Coord> coords;
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        require_same_shape(params[ti], analytic_grads[ti], "finite_diff_check");
        for (std::size_t o = 0; o < params[ti].size(); ++o) coords.push_back({ti, o});
    }

    std::vector<double> numeric(coords.size());
    par::for_blocks(coords.size(), 64, parallel, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<Tensor> local = params;  // private copy; perturbed in place
        for (std::size_t c = begin; c < end; ++c) {
            double& slot = local[coords[c].tensor][coords[c].offset];
            const double base = slot;
            slot = base + eps;
            const double up = f(local);
            slot = base - eps;
            const double down = f(local);
            slot = base;
            numeric[c] = (up - down) / (2.0 * eps);
        }
    });

    if (per_tensor_max) per_tensor_max->assign(params.size(), 0.0);
    GradCheckResult result;
    for (std::size_t c = 0; c < coords.size(); ++c) {
        const std::size_t ti = coords[c].tensor;
        const double a = analytic_grads[ti][coords[c].offset];
        const double n = numeric[c];
        const double denom = std::max({std::abs(a), std::abs(n), 1e-3});
        const double rel = std::abs(a - n) / denom;
        if (per_tensor_max) (*per_tensor_max)[ti] = std::max((*per_tensor_max)[ti], rel);
        if (rel > result.max_rel_err || result.worst_param.empty()) {
            const int cols = params[ti].cols();
            result.max_rel_err = rel;
            result.worst_param = names[ti];
            result.worst_row = static_cast<int>(coords[c].offset) / cols;
            result.worst_col = static_cast<int>(coords[c].offset) % cols;
            result.analytic = a;
            result.numeric = n;
        }
    }
    return result;
}

}  // namespace tandem
