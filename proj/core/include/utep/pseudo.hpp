#pragma once

#include "utep/ndgrad/array2.hpp"

namespace utep {

using ndgrad::Array2;

struct PseudoLabelSet {
  Array2 probs;     // g
  Array2 positive;  // h, 1[g >= beta]
  Array2 negative;  // l, 1[g <= gamma]
  double beta = 0.95;
  double gamma = 0.05;
};

/// h[c] = 1[g[c] >= beta]. beta must lie in (0, 1).
Array2 select_positive(const Array2& probs, double beta);
/// l[c] = 1[g[c] <= gamma]. Requires 0 < gamma < beta < 1.
Array2 select_negative(const Array2& probs, double gamma, double beta);

PseudoLabelSet select_pseudo_labels(const Array2& probs, double beta, double gamma);

}  // namespace utep
