#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egf/flow.hpp"
#include "egf/histogram.hpp"
#include "egf/ibm.hpp"
#include "egf/model.hpp"
#include "egf/pde.hpp"

namespace egf {

using Observable = std::function<double(double)>;

// (sum phi(x_i)) / K.
double pair_measure(const PopulationState& state, const Observable& phi);
// sum phi(midpoint) * mass; mass outside the bins is ignored.
double pair_measure(const Histogram& h, const Observable& phi);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> variance;  // unbiased; 0 for a single replica
  std::vector<double> min;
  std::vector<double> max;
};

struct EnsembleSummary {
  std::int64_t k = 0;
  std::size_t replicas = 0;
  std::vector<double> times;
  SeriesStats n, e, omega, r;
  // Replica-averaged histograms, keyed by snapshot time.
  std::map<double, Histogram> snapshots;
};

// Folds replicas in replica-index order so the result does not depend on how
// the ensemble was scheduled. Throws std::invalid_argument on an empty input
// or mismatched time grids.
EnsembleSummary summarize_ensemble(std::vector<Trajectory> trajs);

struct ObservableError {
  double sup_abs = 0.0;  // sup_t |ibm - pde|
  double sup_ref = 0.0;  // sup_t |pde|
  double sup_rel = 0.0;  // sup_abs / sup_ref
  double worst_time = 0.0;
};

struct SnapshotDistance {
  double l1 = 0.0;  // NaN when either side has no mass in the window
  double ibm_outside = 0.0;
  double pde_outside = 0.0;
};

struct ComparisonReport {
  double t0 = 0.0;
  double t1 = 0.0;
  std::int64_t k = 0;
  std::size_t replicas = 0;
  std::map<std::string, ObservableError> errors;  // N, E, Omega, R
  std::map<double, SnapshotDistance> snapshots;
  std::optional<double> qv_slope;
  std::int64_t biomass_violations = 0;
};

// Errors over summary times in [t0, t1], with the PDE series linearly
// interpolated in time. Snapshot densities are taken at the nearest recorded
// PDE time (which must lie within half a record step) and binned on the IBM
// histogram edges. Throws std::invalid_argument when the window holds no
// summary time.
ComparisonReport compare_to_pde(const EnsembleSummary& summary, const DensityTrajectory& pde, double t0, double t1,
                                const std::vector<double>& snapshot_times);

// Self-comparison helper: an ensemble summary built from a PDE trajectory.
EnsembleSummary summary_from_pde(const DensityTrajectory& pde, const std::vector<double>& edges,
                                 const std::vector<double>& snapshot_times);

struct QvResult {
  double slope = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<std::int64_t> k_values;
  std::vector<double> variances;
};

// OLS slope of log Var vs log K with a percentile-bootstrap 90% interval
// (replicas resampled within each K). Needs at least 3 K values and 50
// samples each; a zero variance throws std::domain_error.
QvResult qv_scaling_from_samples(const std::map<std::int64_t, std::vector<double>>& samples,
                                 std::size_t bootstrap = 1000, std::uint64_t seed = 7);

// Runs `replicas` replicas of `base` to time t for every K and feeds
// <mu_t, phi> into qv_scaling_from_samples. Trajectories are handed to
// `on_run` when set (e.g. for auditing).
QvResult qv_scaling_test(const SimConfig& base, const std::vector<std::int64_t>& k_values, std::size_t replicas,
                         const Observable& phi, double t, std::size_t threads = 1,
                         const std::function<void(const Trajectory&)>& on_run = {});

// Samples with R + E > R0 + E0 + t sup|renewal| + 1e-9 (R0 + E0 + 1).
std::int64_t biomass_audit(const Trajectory& traj, const ModelParams& p);
std::int64_t biomass_audit(const DensityTrajectory& traj, const ModelParams& p);
std::int64_t biomass_audit(const std::vector<double>& times, const std::vector<double>& e, const std::vector<double>& r,
                           const ModelParams& p);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
KsResult ks_test_exponential(std::vector<double> samples, double rate);

// Smooth bump exp(-1 / (1 - z^2)), z = (x - center) / half_width.
Observable smooth_bump(double center, double half_width);

}  // namespace egf
