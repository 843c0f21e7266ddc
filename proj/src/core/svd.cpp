// Copyright 2026 The AsymRec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/svd.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace asymrec::num {

std::vector<double> svd_values(const Matrix& a) {
  if (a.empty()) throw usage_error("svd_values: empty matrix");
  if (!a.all_finite()) throw numeric_error("svd_values: non-finite input");

  // Work with rows >= cols; singular values of A and A^T coincide.
  Matrix b = a.rows() >= a.cols() ? a : transpose(a);
  const std::size_t n = b.cols();
  const std::size_t rows = b.rows();

  auto col_dot = [&](std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += b.at(i, p) * b.at(i, q);
    return s;
  };

  const double tol = 1e-14;
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = col_dot(p, p);
        const double beta = col_dot(q, q);
        const double g = col_dot(p, q);
        if (std::fabs(g) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        // Jacobi rotation that orthogonalizes columns p and q.
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) /
            (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double bp = b.at(i, p);
          const double bq = b.at(i, q);
          b.at(i, p) = c * bp - s * bq;
          b.at(i, q) = s * bp + c * bq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> values(n);
  for (std::size_t p = 0; p < n; ++p) values[p] = std::sqrt(col_dot(p, p));
  std::sort(values.begin(), values.end(), std::greater<double>());
  return values;
}

}  // namespace asymrec::num
