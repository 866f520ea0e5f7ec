#pragma once

#include <cstddef>
#include <vector>

#include "utep/ndgrad/array2.hpp"

namespace utep {

using ndgrad::Array2;

/// Domain flag convention: 1 = source, 0 = target.
inline constexpr int kSourceDomain = 1;
inline constexpr int kTargetDomain = 0;

/// Samples with ground truth. `labeled` controls whether a label may be used
/// for training; `y` is always kept for evaluation.
struct LabeledBatch {
  Array2 x;
  std::vector<int> y;
  std::vector<int> domain;
  std::vector<bool> labeled;
  std::vector<int> id;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
  bool empty() const { return y.empty(); }

  void append(const LabeledBatch& other, std::size_t row);
  LabeledBatch subset(const std::vector<std::size_t>& rows) const;
  /// Throws std::invalid_argument if field lengths disagree.
  void validate() const;
};

}  // namespace utep
