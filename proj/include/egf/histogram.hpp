#pragma once

#include <functional>
#include <span>
#include <vector>

namespace egf {

struct HistogramSpec {
  double lo = 0.0;
  double hi = 5.0;
  std::size_t bins = 100;

  std::vector<double> edges() const;
};

// Masses on fixed bins; mass falling outside [edges.front(), edges.back())
// is kept separately.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> mass;
  double below = 0.0;
  double above = 0.0;

  std::size_t bins() const { return mass.size(); }
  double total() const;
  double midpoint(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  Histogram& operator+=(const Histogram& other);
  Histogram scaled(double factor) const;
};

Histogram make_histogram(std::span<const double> values, double weight, const std::vector<double>& edges);

// Masses renormalized to sum to 1 over the window; empty when the window
// carries no mass.
std::vector<double> renormalized(const Histogram& h);

// L1 distance between the renormalized histograms, in [0, 2]. NaN when
// either side carries no mass in the window.
double l1_distance(const Histogram& a, const Histogram& b);

}  // namespace egf
