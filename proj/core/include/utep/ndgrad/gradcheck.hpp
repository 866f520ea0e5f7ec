#pragma once

#include <functional>
#include <span>
#include <vector>

#include "utep/ndgrad/tape.hpp"

namespace utep::ndgrad {

/// Builds a scalar-valued graph on the given tape from the bound parameters.
/// Must be deterministic: any randomness (dropout masks) is fixed by the caller.
using GraphFn = std::function<Var(Tape&)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients of `fn` with central differences over every
/// entry of `params`. Relative error per entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
/// `numeric_scale` multiplies the numeric side first; gradient reversal with
/// factor lambda is checked with numeric_scale = -lambda.
GradcheckResult gradcheck(const GraphFn& fn, std::span<Parameter* const> params,
                          double step = 1e-5, double numeric_scale = 1.0);

}  // namespace utep::ndgrad
