#include "slak/tensor.hpp"

#include <cmath>

namespace slak {

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Tensor();
  Tensor t(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != t.cols())
      fail(ErrorKind::Invalid, "Tensor::from_rows: ragged rows");
    for (size_t c = 0; c < t.cols(); ++c) t.at(r, c) = rows[r][c];
  }
  return t;
}

Tensor Tensor::column(const std::vector<double>& values) {
  Tensor t(values.size(), 1);
  for (size_t i = 0; i < values.size(); ++i) t.at(i, 0) = values[i];
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::max_abs_diff(const Tensor& o) const {
  if (!same_shape(o))
    fail(ErrorKind::Invalid, "max_abs_diff: shape mismatch " + shape_str() + " vs " + o.shape_str());
  double m = 0.0;
  for (size_t i = 0; i < data_.size(); ++i)
    m = std::max(m, std::fabs(data_[i] - o.data_[i]));
  return m;
}

}  // namespace slak
