#include "egf/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "egf/rng.hpp"

namespace egf {

double pair_measure(const PopulationState& state, const Observable& phi) {
  double s = 0.0;
  for (double x : state.energies()) s += phi(x);
  return s / static_cast<double>(state.scale_k);
}

double pair_measure(const Histogram& h, const Observable& phi) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i)
    if (h.mass[i] != 0.0) s += phi(h.midpoint(i)) * h.mass[i];
  return s;
}

namespace {

void fold(SeriesStats& st, const std::vector<const std::vector<double>*>& series) {
  const std::size_t nt = series.front()->size();
  const auto reps = static_cast<double>(series.size());
  st.mean.assign(nt, 0.0);
  st.variance.assign(nt, 0.0);
  st.min.assign(nt, std::numeric_limits<double>::infinity());
  st.max.assign(nt, -std::numeric_limits<double>::infinity());
  for (const auto* s : series) {
    for (std::size_t i = 0; i < nt; ++i) {
      st.mean[i] += (*s)[i];
      st.min[i] = std::min(st.min[i], (*s)[i]);
      st.max[i] = std::max(st.max[i], (*s)[i]);
    }
  }
  for (double& m : st.mean) m /= reps;
  if (series.size() < 2) return;
  for (const auto* s : series)
    for (std::size_t i = 0; i < nt; ++i) {
      const double d = (*s)[i] - st.mean[i];
      st.variance[i] += d * d;
    }
  for (double& v : st.variance) v /= reps - 1.0;
}

double interpolate(const std::vector<double>& ts, const std::vector<double>& ys, double t) {
  if (t <= ts.front()) return ys.front();
  if (t >= ts.back()) return ys.back();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const auto hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

std::size_t nearest_index(const std::vector<double>& ts, double t) {
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  std::size_t i = static_cast<std::size_t>(it - ts.begin());
  if (i == ts.size()) return i - 1;
  if (i > 0 && t - ts[i - 1] < ts[i] - t) --i;
  return i;
}

}  // namespace

EnsembleSummary summarize_ensemble(std::vector<Trajectory> trajs) {
  if (trajs.empty()) throw std::invalid_argument("summarize_ensemble: no replicas");
  std::sort(trajs.begin(), trajs.end(), [](const Trajectory& a, const Trajectory& b) { return a.replica < b.replica; });
  EnsembleSummary s;
  s.k = trajs.front().k;
  s.replicas = trajs.size();
  s.times = trajs.front().times;
  for (const auto& t : trajs) {
    if (t.times != s.times) throw std::invalid_argument("summarize_ensemble: replicas have different time grids");
    if (t.k != s.k) throw std::invalid_argument("summarize_ensemble: replicas have different K");
    if (t.n.size() != s.times.size() || t.e.size() != s.times.size() || t.omega.size() != s.times.size() ||
        t.r.size() != s.times.size())
      throw std::invalid_argument("summarize_ensemble: series length does not match the time grid");
  }
  std::vector<const std::vector<double>*> n, e, o, r;
  for (const auto& t : trajs) {
    n.push_back(&t.n);
    e.push_back(&t.e);
    o.push_back(&t.omega);
    r.push_back(&t.r);
  }
  fold(s.n, n);
  fold(s.e, e);
  fold(s.omega, o);
  fold(s.r, r);

  const double inv = 1.0 / static_cast<double>(trajs.size());
  for (const auto& [t, h] : trajs.front().snapshots) {
    Histogram acc = h.scaled(0.0);
    for (const auto& tr : trajs) {
      auto it = tr.snapshots.find(t);
      if (it == tr.snapshots.end()) throw std::invalid_argument("summarize_ensemble: replicas have different snapshots");
      acc += it->second;
    }
    s.snapshots.emplace(t, acc.scaled(inv));
  }
  return s;
}

ComparisonReport compare_to_pde(const EnsembleSummary& summary, const DensityTrajectory& pde, double t0, double t1,
                                const std::vector<double>& snapshot_times) {
  if (pde.times.empty()) throw std::invalid_argument("compare_to_pde: empty PDE trajectory");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < summary.times.size(); ++i)
    if (summary.times[i] >= t0 - 1e-12 && summary.times[i] <= t1 + 1e-12) idx.push_back(i);
  if (idx.empty()) throw std::invalid_argument("compare_to_pde: window contains no sample time");

  ComparisonReport rep;
  rep.t0 = t0;
  rep.t1 = t1;
  rep.k = summary.k;
  rep.replicas = summary.replicas;
  auto score = [&](const std::vector<double>& ibm, const std::vector<double>& ref) {
    ObservableError e;
    for (std::size_t i : idx) {
      const double t = summary.times[i];
      const double y = interpolate(pde.times, ref, t);
      const double diff = std::abs(ibm[i] - y);
      if (diff > e.sup_abs) {
        e.sup_abs = diff;
        e.worst_time = t;
      }
      e.sup_ref = std::max(e.sup_ref, std::abs(y));
    }
    if (e.sup_ref > 0.0)
      e.sup_rel = e.sup_abs / e.sup_ref;
    else
      e.sup_rel = e.sup_abs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return e;
  };
  rep.errors["N"] = score(summary.n.mean, pde.nstar);
  rep.errors["E"] = score(summary.e.mean, pde.estar);
  rep.errors["Omega"] = score(summary.omega.mean, pde.omegastar);
  rep.errors["R"] = score(summary.r.mean, pde.rstar);

  for (double t : snapshot_times) {
    auto it = summary.snapshots.find(t);
    if (it == summary.snapshots.end())
      throw std::invalid_argument("compare_to_pde: no IBM snapshot at t = " + std::to_string(t));
    const std::size_t k = nearest_index(pde.times, t);
    const double step = pde.times.size() > 1 ? pde.times[1] - pde.times[0] : 0.0;
    if (std::abs(pde.times[k] - t) > 0.5 * step + 1e-9 || k >= pde.densities.size() || pde.densities[k].empty())
      throw std::invalid_argument("compare_to_pde: no PDE density near t = " + std::to_string(t));
    const Histogram ref = bin_density(pde.grid, pde.densities[k], it->second.edges);
    SnapshotDistance d;
    d.l1 = l1_distance(it->second, ref);
    d.ibm_outside = it->second.below + it->second.above;
    d.pde_outside = ref.below + ref.above;
    rep.snapshots[t] = d;
  }
  return rep;
}

EnsembleSummary summary_from_pde(const DensityTrajectory& pde, const std::vector<double>& edges,
                                 const std::vector<double>& snapshot_times) {
  EnsembleSummary s;
  s.k = 0;
  s.replicas = 1;
  s.times = pde.times;
  auto single = [](const std::vector<double>& v) {
    SeriesStats st;
    st.mean = v;
    st.variance.assign(v.size(), 0.0);
    st.min = v;
    st.max = v;
    return st;
  };
  s.n = single(pde.nstar);
  s.e = single(pde.estar);
  s.omega = single(pde.omegastar);
  s.r = single(pde.rstar);
  for (double t : snapshot_times)
    s.snapshots.emplace(t, bin_density(pde.grid, pde.densities[nearest_index(pde.times, t)], edges));
  return s;
}

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double sample_variance(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (n - 1.0);
}

}  // namespace

QvResult qv_scaling_from_samples(const std::map<std::int64_t, std::vector<double>>& samples, std::size_t bootstrap,
                                 std::uint64_t seed) {
  if (samples.size() < 3) throw std::invalid_argument("qv_scaling_test: need at least 3 K values");
  for (const auto& [k, v] : samples)
    if (v.size() < 50)
      throw std::invalid_argument("qv_scaling_test: need at least 50 replicas per K (K = " + std::to_string(k) + ")");

  QvResult res;
  std::vector<double> lx, ly;
  for (const auto& [k, v] : samples) {
    const double var = sample_variance(v);
    if (!(var > 0.0))
      throw std::domain_error("qv_scaling_test: zero variance at K = " + std::to_string(k) +
                              "; try an earlier time or a test function seeing the surviving population");
    res.k_values.push_back(k);
    res.variances.push_back(var);
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(var));
  }
  res.slope = ols_slope(lx, ly);

  Rng rng(seed);
  std::vector<double> slopes;
  slopes.reserve(bootstrap);
  std::vector<double> draw;
  for (std::size_t b = 0; b < bootstrap; ++b) {
    std::vector<double> by;
    bool degenerate = false;
    for (const auto& [k, v] : samples) {
      draw.resize(v.size());
      for (double& d : draw) d = v[rng.index(v.size())];
      const double var = sample_variance(draw);
      if (!(var > 0.0)) {
        degenerate = true;
        break;
      }
      by.push_back(std::log(var));
    }
    if (!degenerate) slopes.push_back(ols_slope(lx, by));
  }
  if (slopes.empty()) {
    res.ci_lo = res.ci_hi = res.slope;
    return res;
  }
  std::sort(slopes.begin(), slopes.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(slopes.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, slopes.size() - 1);
    return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
  };
  res.ci_lo = quantile(0.05);
  res.ci_hi = quantile(0.95);
  return res;
}

QvResult qv_scaling_test(const SimConfig& base, const std::vector<std::int64_t>& k_values, std::size_t replicas,
                         const Observable& phi, double t, std::size_t threads,
                         const std::function<void(const Trajectory&)>& on_run) {
  if (k_values.size() < 3) throw std::invalid_argument("qv_scaling_test: need at least 3 K values");
  if (replicas < 50) throw std::invalid_argument("qv_scaling_test: need at least 50 replicas per K");
  std::map<std::int64_t, std::vector<double>> samples;
  for (auto k : k_values) {
    SimConfig cfg = base;
    cfg.k = k;
    cfg.t_end = t;
    cfg.snapshot_times.clear();
    std::vector<double> vals(replicas);
    std::vector<Trajectory> runs(replicas);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&]() {
      for (std::size_t r = next++; r < replicas; r = next++) {
        try {
          auto res = simulate_full(cfg, r);
          vals[r] = pair_measure(res.final_state, phi);
          runs[r] = std::move(res.trajectory);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const std::size_t nt = std::max<std::size_t>(1, std::min(threads, replicas));
    if (nt == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < nt; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    if (on_run)
      for (const auto& tr : runs) on_run(tr);
    samples[k] = std::move(vals);
  }
  return qv_scaling_from_samples(samples);
}

std::int64_t biomass_audit(const std::vector<double>& times, const std::vector<double>& e, const std::vector<double>& r,
                           const ModelParams& p) {
  if (times.empty()) return 0;
  const double start = r.front() + e.front();
  const double tol = 1e-9 * (start + 1.0);
  const double sup = p.renewal_sup();
  std::int64_t bad = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double bound = start + (times[i] - times.front()) * sup;
    if (!(r[i] + e[i] <= bound + tol)) ++bad;
  }
  return bad;
}

std::int64_t biomass_audit(const Trajectory& traj, const ModelParams& p) {
  return biomass_audit(traj.times, traj.e, traj.r, p);
}

std::int64_t biomass_audit(const DensityTrajectory& traj, const ModelParams& p) {
  return biomass_audit(traj.times, traj.estar, traj.rstar, p);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_test: no samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  // Asymptotic Kolmogorov distribution with Stephens' small-sample correction.
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  if (lambda < 0.2) {
    p = 1.0;
  } else {
    for (int j = 1; j <= 100; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      p += (j % 2 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
    p = std::clamp(p, 0.0, 1.0);
  }
  return {d, p};
}

KsResult ks_test_exponential(std::vector<double> samples, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("ks_test_exponential: rate must be positive");
  return ks_test(std::move(samples), [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
}

Observable smooth_bump(double center, double half_width) {
  return [center, half_width](double x) {
    const double z = (x - center) / half_width;
    if (std::abs(z) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - z * z));
  };
}

}  // namespace egf
