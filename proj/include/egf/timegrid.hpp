#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace egf {

// Record times k * record_dt up to t_end, with t_end appended when it is not
// on the lattice.
inline std::vector<double> record_times(double t_end, double record_dt) {
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * record_dt;
    if (t > t_end * (1.0 + 1e-12)) break;
    out.push_back(std::min(t, t_end));
  }
  if (t_end - out.back() > 1e-9 * std::max(1.0, t_end)) out.push_back(t_end);
  return out;
}

}  // namespace egf
