#include "textwalk/matrix.hpp"

#include <algorithm>

namespace textwalk {

void TensorGrad::clear() {
  for (auto r : touched_rows) {
    touched[r] = 0;
    auto row = value.row(r);
    std::fill(row.begin(), row.end(), 0.0);
  }
  touched_rows.clear();
}

}  // namespace textwalk
