#pragma once

#include "fbitw/tw.hpp"

namespace fbitw {

enum class EmInit { Balanced, Zero, Tw };

struct EmResult {
    ImputedPanel imputed;
    FactorModel model;
    int iterations = 0;
    bool converged = false;
    // ||Filled_k - C_k||_F^2 per iteration; non-increasing for this scheme.
    std::vector<double> objective;
};

// Iterative principal-components imputation: fill the missing cells, run
// principal components on the filled matrix, refill with the fitted common
// component, repeat until the largest change on missing cells (relative to
// 1 + max |C|) drops below tol. Observed cells are never altered.
//
// Balanced initialization: principal components on the balanced block, then
// per-series loadings by regressing the balanced periods on those factors and
// per-period factors by regressing the balanced series on those loadings.
EmResult impute_em(const Panel& p, int r, EmInit init = EmInit::Balanced,
                   double tol = 1e-6, int max_iter = 500);

}  // namespace fbitw
