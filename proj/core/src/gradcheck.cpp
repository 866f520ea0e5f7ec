#include "utep/ndgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace utep::ndgrad {

namespace {

double evaluate(const GraphFn& fn) {
  Tape tape;
  return fn(tape).item();
}

}  // namespace

GradcheckResult gradcheck(const GraphFn& fn, std::span<Parameter* const> params, double step,
                          double numeric_scale) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = fn(tape);
    tape.backward(out);  // throws on non-scalar output
  }

  GradcheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + step;
      const double up = evaluate(fn);
      p->value[i] = original - step;
      const double down = evaluate(fn);
      p->value[i] = original;

      const double numeric = numeric_scale * (up - down) / (2.0 * step);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      result.max_relative_error =
          std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
      result.max_abs_analytic = std::max(result.max_abs_analytic, std::abs(analytic));
      ++result.entries_checked;
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return result;
}

}  // namespace utep::ndgrad
