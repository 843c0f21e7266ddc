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

#include "core/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace asymrec::num {

std::string FdReport::describe() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_err
     << " over " << coords_checked << " coordinates; worst at "
     << worst_param << "(" << worst_row << "," << worst_col
     << ") analytic=" << worst_analytic << " numeric=" << worst_numeric;
  return os.str();
}

FdReport finite_difference_check(const std::function<double()>& loss_fn,
                                 const std::map<std::string, Matrix>& grads,
                                 const std::vector<ParamRef>& params,
                                 double step, double tol) {
  if (step <= 0.0 || tol <= 0.0)
    throw usage_error("finite_difference_check: step and tol must be > 0");

  FdReport rep;
  for (const ParamRef& p : params) {
    auto it = grads.find(p.name);
    if (it == grads.end())
      throw usage_error("finite_difference_check: no gradient for " + p.name);
    const Matrix& g = it->second;
    if (!g.same_shape(*p.value))
      throw usage_error("finite_difference_check: gradient shape mismatch for " +
                        p.name);
    for (std::size_t r = 0; r < p.value->rows(); ++r) {
      for (std::size_t c = 0; c < p.value->cols(); ++c) {
        const double saved = p.value->at(r, c);
        p.value->at(r, c) = saved + step;
        const double fp = loss_fn();
        p.value->at(r, c) = saved - step;
        const double fm = loss_fn();
        p.value->at(r, c) = saved;
        const double numeric = (fp - fm) / (2.0 * step);
        const double analytic = g.at(r, c);
        // Floor keeps FD round-off noise on near-zero coordinates from
        // being scored as a relative error blow-up.
        const double denom =
            std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
        const double rel = std::fabs(analytic - numeric) / denom;
        ++rep.coords_checked;
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst_param = p.name;
          rep.worst_row = r;
          rep.worst_col = c;
          rep.worst_analytic = analytic;
          rep.worst_numeric = numeric;
        }
      }
    }
  }
  rep.pass = rep.max_rel_err < tol;
  return rep;
}

}  // namespace asymrec::num
