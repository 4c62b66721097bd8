#include "pcmp/matrix.hpp"

#include <algorithm>

#include "pcmp/errors.hpp"

namespace pcmp {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "ragged rows in from_rows");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

}  // namespace pcmp
