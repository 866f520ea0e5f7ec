#include "utep/ndgrad/array2.hpp"

#include <algorithm>
#include <cmath>

namespace utep::ndgrad {

Array2::Array2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Array2::Array2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Array2: data length " + std::to_string(data_.size()) +
                     " does not match shape (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + ")");
  }
}

Array2::Array2(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Array2: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Array2 Array2::column(std::span<const double> values) {
  return Array2(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

bool Array2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Array2::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Array2& Array2::operator+=(const Array2& other) {
  require_same_shape(*this, other, "+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void require_same_shape(const Array2& a, const Array2& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace utep::ndgrad
