#pragma once

#include <span>

#include "utep/ndgrad/tape.hpp"

namespace utep::ndgrad {

// Every op checks shapes (ShapeError naming both shapes) and rejects
// non-finite results (NonFiniteError).

Var matmul(Var a, Var b);
/// Elementwise sum. `b` may also be a 1 x cols row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
/// 1 - a
Var one_minus(Var a);

Var relu(Var a);
Var sigmoid(Var a);
/// Row-wise softmax.
Var softmax(Var a);
/// log(max(a, floor)); the gradient is zero where the floor is active.
/// floor = 0 gives the plain logarithm.
Var log(Var a, double floor = 0.0);
Var exp(Var a);
Var square(Var a);

/// Sum of all entries (1x1).
Var sum(Var a);
/// Mean of all entries (1x1).
Var mean(Var a);
/// Per-row sum (rows x 1).
Var row_sum(Var a);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// Inverted dropout: a * mask / (1 - rate) with a binary keep-mask.
Var dropout(Var a, const Array2& mask, double rate);
/// Identity forward; backward multiplies the upstream gradient by -lambda.
Var gradient_reverse(Var a, double lambda);

}  // namespace utep::ndgrad
