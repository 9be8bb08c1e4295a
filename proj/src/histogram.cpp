#include "egf/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace egf {

std::vector<double> HistogramSpec::edges() const {
  if (!(hi > lo) || bins == 0) throw std::invalid_argument("histogram: need lo < hi and bins > 0");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  return e;
}

double Histogram::total() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

Histogram& Histogram::operator+=(const Histogram& other) {
  if (edges != other.edges) throw std::invalid_argument("histogram: bin edges differ");
  for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += other.mass[i];
  below += other.below;
  above += other.above;
  return *this;
}

Histogram Histogram::scaled(double factor) const {
  Histogram h = *this;
  for (double& m : h.mass) m *= factor;
  h.below *= factor;
  h.above *= factor;
  return h;
}

Histogram make_histogram(std::span<const double> values, double weight, const std::vector<double>& edges) {
  if (edges.size() < 2) throw std::invalid_argument("histogram: need at least one bin");
  Histogram h;
  h.edges = edges;
  h.mass.assign(edges.size() - 1, 0.0);
  for (double v : values) {
    if (v < edges.front()) {
      h.below += weight;
    } else if (v >= edges.back()) {
      h.above += weight;
    } else {
      auto it = std::upper_bound(edges.begin(), edges.end(), v);
      h.mass[static_cast<std::size_t>(it - edges.begin()) - 1] += weight;
    }
  }
  return h;
}

std::vector<double> renormalized(const Histogram& h) {
  const double t = h.total();
  if (!(t > 0.0)) return {};
  std::vector<double> out(h.mass.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h.mass[i] / t;
  return out;
}

double l1_distance(const Histogram& a, const Histogram& b) {
  if (a.edges != b.edges) throw std::invalid_argument("l1_distance: bin edges differ");
  const auto p = renormalized(a);
  const auto q = renormalized(b);
  if (p.empty() || q.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

}  // namespace egf
