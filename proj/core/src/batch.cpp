#include "utep/batch.hpp"

#include <stdexcept>

namespace utep {

void LabeledBatch::append(const LabeledBatch& other, std::size_t row) {
  if (!x.empty() && x.cols() != other.x.cols()) {
    throw ndgrad::ShapeError("LabeledBatch::append: dimension mismatch");
  }
  const std::size_t cols = other.x.cols();
  std::vector<double> data(x.data().begin(), x.data().end());
  auto r = other.x.row(row);
  data.insert(data.end(), r.begin(), r.end());
  x = Array2(y.size() + 1, cols, std::move(data));
  y.push_back(other.y[row]);
  domain.push_back(other.domain[row]);
  labeled.push_back(other.labeled[row]);
  id.push_back(other.id[row]);
}

LabeledBatch LabeledBatch::subset(const std::vector<std::size_t>& rows) const {
  LabeledBatch out;
  const std::size_t cols = x.cols();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (std::size_t r : rows) {
    if (r >= size()) throw std::out_of_range("LabeledBatch::subset: row out of range");
    auto src = x.row(r);
    data.insert(data.end(), src.begin(), src.end());
    out.y.push_back(y[r]);
    out.domain.push_back(domain[r]);
    out.labeled.push_back(labeled[r]);
    out.id.push_back(id[r]);
  }
  out.x = Array2(rows.size(), cols, std::move(data));
  return out;
}

void LabeledBatch::validate() const {
  const std::size_t n = y.size();
  if (x.rows() != n || domain.size() != n || labeled.size() != n || id.size() != n) {
    throw std::invalid_argument("LabeledBatch: inconsistent field lengths");
  }
  for (int d : domain) {
    if (d != kSourceDomain && d != kTargetDomain) {
      throw std::invalid_argument("LabeledBatch: domain flag must be 0 or 1");
    }
  }
}

}  // namespace utep
