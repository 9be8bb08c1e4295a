#include "egf/ibm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace egf {

// ---------------------------------------------------------------------------
// Initial density

InitialDensity::InitialDensity(double x_min, double x_max) : x_min_(x_min), x_max_(x_max) {
  if (!(x_min > 0.0 && x_max > x_min))
    throw std::invalid_argument("initial density: need 0 < x_min < x_max");
  constexpr std::size_t kSimpson = 20000;
  const double h = (x_max_ - x_min_) / kSimpson;
  double s = shape(x_min_) + shape(x_max_);
  for (std::size_t i = 1; i < kSimpson; ++i) s += (i % 2 ? 4.0 : 2.0) * shape(x_min_ + h * static_cast<double>(i));
  c_ = 1.0 / (s * h / 3.0);

  cdf_.assign(kTablePoints, 0.0);
  const double dt = (x_max_ - x_min_) / static_cast<double>(kTablePoints - 1);
  for (std::size_t i = 1; i < kTablePoints; ++i) {
    const double a = x_min_ + dt * static_cast<double>(i - 1);
    cdf_[i] = cdf_[i - 1] + dt / 6.0 * (shape(a) + 4.0 * shape(a + 0.5 * dt) + shape(a + dt));
  }
  const double last = cdf_.back();
  for (double& v : cdf_) v /= last;
}

double InitialDensity::shape(double x) const {
  if (x <= x_min_ || x >= x_max_) return 0.0;
  const double w = x_max_ - x_min_;
  return std::pow((x - x_min_) * (x_max_ - x) / (w * w), 5);
}

double InitialDensity::operator()(double x) const { return c_ * shape(x); }

double InitialDensity::sample(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin(), 1, kTablePoints - 1));
  const std::size_t lo = hi - 1;
  const double span = cdf_[hi] - cdf_[lo];
  const double frac = span > 0.0 ? (u - cdf_[lo]) / span : 0.5;
  const double dt = (x_max_ - x_min_) / static_cast<double>(kTablePoints - 1);
  return x_min_ + dt * (static_cast<double>(lo) + frac);
}

// ---------------------------------------------------------------------------
// Configuration

void SimConfig::check() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid simulation config: ") + what);
  };
  require(k > 0, "K must be positive");
  require(t_end > 0.0, "T must be positive");
  require(record_dt > 0.0, "record_dt must be positive");
  require(cap_b > 0.0 && cap_d > 0.0, "rate caps must be positive");
  require(flow_substep > 0.0, "flow substep must be positive");
  require(bound_safety >= 1.0, "bound safety factor must be >= 1");
  require(initial.r0 >= 0.0 && initial.r0 <= model.rates().r_max, "R0 must lie in [0, R_max]");
  if (initial.mode == InitialCondition::Mode::density_u0) {
    require(initial.x_min > 0.0 && initial.x_min < initial.x_max, "need 0 < x_min < x_max");
  } else {
    for (double x : initial.energies) require(x > 0.0, "explicit energies must be positive");
  }
}

double SimConfig::energy_ceiling() const {
  const auto& a = model.rates();
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) return std::numeric_limits<double>::infinity();
  double start = initial.x_max;
  if (initial.mode == InitialCondition::Mode::explicit_list) {
    start = 0.0;
    for (double x : initial.energies) start = std::max(start, x);
    if (start <= 0.0) start = a.x0;
  }
  return 10.0 * max_energy_bound(a, std::max(start, a.x0), t_end);
}

EventCounts& EventCounts::operator+=(const EventCounts& o) {
  births += o.births;
  deaths += o.deaths;
  b_clamps += o.b_clamps;
  d_clamps += o.d_clamps;
  vanished += o.vanished;
  phantoms += o.phantoms;
  bound_violations += o.bound_violations;
  truncated = truncated || o.truncated;
  return *this;
}

// ---------------------------------------------------------------------------
// Elementary operations

PopulationState sample_initial(const SimConfig& cfg, Rng& rng) {
  cfg.check();
  const auto& ic = cfg.initial;
  if (ic.mode == InitialCondition::Mode::explicit_list)
    return PopulationState(ic.energies, ic.r0, cfg.k);
  InitialDensity u0(ic.x_min, ic.x_max);
  std::vector<double> xs(static_cast<std::size_t>(cfg.k));
  for (double& x : xs) x = u0.sample(rng);
  return PopulationState(std::move(xs), ic.r0, cfg.k);
}

std::uint64_t apply_birth(PopulationState& state, std::uint64_t id, double x0) {
  const std::size_t s = state.slot(id);
  const double x = state.energies()[s];
  if (!(x > x0)) throw std::logic_error("apply_birth: parent energy does not exceed x0");
  state.energies_mut()[s] = x - x0;
  return state.add(x0);
}

void apply_death(PopulationState& state, std::uint64_t id) { state.remove(id); }

NextEvent next_event(const SimConfig& cfg, PopulationState& state, Rng& rng, EventCounts& counts,
                     FlowWorkspace& ws) {
  const ModelParams& p = cfg.model;
  const FlowLimits limits{cfg.energy_floor, cfg.energy_ceiling(), cfg.freeze_resource};
  auto run_to_end = [&]() {
    if (state.time < cfg.t_end) integrate_flow_inplace(p, state, cfg.t_end - state.time, cfg.flow_substep, limits, ws);
    return NextEvent{cfg.t_end, EventKind::none, 0};
  };
  if (state.empty()) return run_to_end();

  const double total_cap = cfg.cap_b + cfg.cap_d;
  const double wait = rng.exponential(static_cast<double>(state.size()) * total_cap);
  if (state.time + wait >= cfg.t_end) return run_to_end();
  integrate_flow_inplace(p, state, wait, cfg.flow_substep, limits, ws);

  const auto slot = static_cast<std::size_t>(rng.index(state.size()));
  const std::uint64_t id = state.ids()[slot];
  const double x = state.energies()[slot];
  const bool birth = rng.uniform() * total_cap < cfg.cap_b;
  const double rate = birth ? p.b(x) : p.d(x);
  const double cap = birth ? cfg.cap_b : cfg.cap_d;
  if (rate > cap) ++(birth ? counts.b_clamps : counts.d_clamps);
  if (rng.uniform() * cap < std::min(rate, cap))
    return NextEvent{state.time, birth ? EventKind::birth : EventKind::death, id};
  ++counts.phantoms;
  return NextEvent{state.time, EventKind::none, id};
}

// ---------------------------------------------------------------------------
// Windowed thinning simulator
//
// The flow is advanced one RK4 substep at a time. Over a substep each
// individual gets dominating rates B = min(cap, safety * max(rate at both
// ends)); proposals are drawn at the summed rate, their energies come from the
// cubic Hermite interpolant of the substep, and a proposal is accepted with
// probability min(rate, cap) / B. On acceptance the whole state is moved to
// the proposal time along the same interpolant, the event is applied and a new
// substep starts there.

namespace {

double hermite(double y0, double y1, double m0, double m1, double s) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
}

class Engine {
 public:
  Engine(const SimConfig& cfg, std::size_t replica)
      : cfg_(cfg), p_(cfg.model), rng_(replica_seed(cfg.seed, replica)), ceiling_(cfg.energy_ceiling()) {
    st_ = sample_initial(cfg, rng_);
    tr_.replica = replica;
    tr_.k = cfg.k;
    edges_ = cfg.histogram.edges();
    sweep();
  }

  SimulationResult run() {
    auto rec = record_times(cfg_.t_end, cfg_.record_dt);
    std::vector<double> snaps;
    for (double t : cfg_.snapshot_times)
      if (t >= 0.0 && t <= cfg_.t_end) snaps.push_back(t);
    std::sort(snaps.begin(), snaps.end());

    std::size_t ir = 0;
    std::size_t is = 0;
    while (ir < rec.size() || is < snaps.size()) {
      const double tr = ir < rec.size() ? rec[ir] : std::numeric_limits<double>::infinity();
      const double ts = is < snaps.size() ? snaps[is] : std::numeric_limits<double>::infinity();
      const double stop = std::min(tr, ts);
      advance_to(stop);
      const double tol = 1e-9 * std::max(1.0, stop);
      if (std::abs(tr - stop) <= tol) {
        record(tr);
        ++ir;
      }
      while (is < snaps.size() && std::abs(snaps[is] - stop) <= tol) {
        tr_.snapshots[snaps[is]] = make_histogram(st_.energies(), 1.0 / static_cast<double>(cfg_.k), edges_);
        ++is;
      }
    }
    return {std::move(tr_), std::move(st_)};
  }

 private:
  void record(double t) {
    tr_.times.push_back(t);
    tr_.n.push_back(st_.n());
    tr_.e.push_back(st_.total_energy());
    tr_.omega.push_back(st_.omega(cfg_.weight));
    tr_.r.push_back(st_.resource);
  }

  double resource_rate(double r, double sum_psi) const {
    return cfg_.freeze_resource ? 0.0 : resource_field(p_, r, sum_psi, static_cast<double>(cfg_.k));
  }

  void rates_at(std::span<const double> x, std::vector<double>& rb, std::vector<double>& rd) const {
    rb.resize(x.size());
    rd.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > cfg_.energy_floor) {
        rb[i] = p_.b(x[i]);
        rd[i] = p_.d(x[i]);
      } else {
        rb[i] = 0.0;
        rd[i] = std::numeric_limits<double>::infinity();
      }
    }
  }

  double bound(double r0, double r1, double cap) const {
    return std::min(cap, cfg_.bound_safety * std::max(r0, r1));
  }

  void annihilate(const char* reason) {
    if (!tr_.events.truncated) {
      tr_.events.truncated = true;
      tr_.events.truncation_reason = reason;
      tr_.events.truncation_time = st_.time;
    }
    st_.clear();
    cache_valid_ = false;
  }

  // Applies the floor and ceiling guard rails to the current energies.
  void sweep() {
    auto x = st_.energies();
    for (std::size_t i = x.size(); i-- > 0;) {
      if (!(x[i] < ceiling_) && x[i] > cfg_.energy_floor) {
        annihilate("explode");
        return;
      }
    }
    for (std::size_t i = st_.size(); i-- > 0;) {
      if (st_.energies()[i] > cfg_.energy_floor) continue;
      if (cfg_.vanish_policy == VanishPolicy::annihilate) {
        annihilate("vanish");
        return;
      }
      st_.remove_slot(i);
      ++tr_.events.vanished;
      cache_valid_ = false;
    }
  }

  void flow_empty(double t_stop) {
    if (t_stop > st_.time) {
      FlowLimits limits{cfg_.energy_floor, ceiling_, cfg_.freeze_resource};
      integrate_flow_inplace(p_, st_, t_stop - st_.time, cfg_.flow_substep, limits, ws_);
    }
    st_.time = t_stop;
  }

  void advance_to(double t_stop) {
    const double tol = 1e-12 * std::max(1.0, t_stop);
    while (t_stop - st_.time > tol) {
      if (st_.empty()) {
        flow_empty(t_stop);
        return;
      }
      if (st_.size() > cfg_.max_population)
        throw PopulationOverflow("population exceeded the hard cap of " + std::to_string(cfg_.max_population) +
                                 " individuals at t = " + std::to_string(st_.time));
      window(t_stop);
    }
    st_.time = t_stop;
  }

  void window(double t_stop) {
    const std::size_t n = st_.size();
    const double k_scale = static_cast<double>(cfg_.k);
    const double t0 = st_.time;
    const bool last = t_stop - t0 <= cfg_.flow_substep;
    const double t1 = last ? t_stop : t0 + cfg_.flow_substep;
    const double h = t1 - t0;
    auto x = st_.energies();

    if (!cache_valid_) {
      dx0_.resize(n);
      dr0_ = resource_rate(st_.resource, energy_field(p_, x, st_.resource, dx0_));
      rates_at(x, rb0_, rd0_);
      cache_valid_ = true;
    }
    x1_.resize(n);
    dx1_.resize(n);
    double r1 = st_.resource;
    rk4_step(p_, x, st_.resource, k_scale, h, cfg_.freeze_resource, x1_, r1, ws_);
    if (cfg_.freeze_resource) r1 = st_.resource;
    dr1_ = resource_rate(r1, energy_field(p_, x1_, r1, dx1_));
    rates_at(x1_, rb1_, rd1_);

    cum_.resize(2 * n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += bound(rb0_[i], rb1_[i], cfg_.cap_b);
      cum_[2 * i] = total;
      total += bound(rd0_[i], rd1_[i], cfg_.cap_d);
      cum_[2 * i + 1] = total;
    }

    double tau = t0;
    while (total > 0.0) {
      tau += rng_.exponential(total);
      if (tau >= t1) break;
      const double u = rng_.uniform() * total;
      auto idx = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
      idx = std::min(idx, 2 * n - 1);
      const std::size_t i = idx / 2;
      const bool birth = idx % 2 == 0;
      const double cap = birth ? cfg_.cap_b : cfg_.cap_d;
      const double b_dom = birth ? bound(rb0_[i], rb1_[i], cap) : bound(rd0_[i], rd1_[i], cap);
      if (!(b_dom > 0.0)) continue;
      const double s = (tau - t0) / h;
      const double xi = hermite(x[i], x1_[i], h * dx0_[i], h * dx1_[i], s);
      double rate;
      if (xi > cfg_.energy_floor) {
        rate = birth ? p_.b(xi) : p_.d(xi);
      } else {
        rate = birth ? 0.0 : std::numeric_limits<double>::infinity();
      }
      if (rate > cap) ++(birth ? tr_.events.b_clamps : tr_.events.d_clamps);
      const double capped = std::min(rate, cap);
      if (capped > b_dom * (1.0 + 1e-12)) ++tr_.events.bound_violations;
      if (rng_.uniform() * b_dom < capped) {
        move_to(tau, s, h, r1);
        const std::uint64_t id = st_.ids()[i];
        if (birth) {
          apply_birth(st_, id, p_.rates().x0);
          ++tr_.events.births;
        } else {
          apply_death(st_, id);
          ++tr_.events.deaths;
        }
        sweep();
        return;
      }
      ++tr_.events.phantoms;
    }

    std::copy(x1_.begin(), x1_.end(), st_.energies_mut().begin());
    st_.resource = r1;
    st_.time = t1;
    std::swap(dx0_, dx1_);
    std::swap(rb0_, rb1_);
    std::swap(rd0_, rd1_);
    dr0_ = dr1_;
    cache_valid_ = true;
    sweep();
  }

  void move_to(double tau, double s, double h, double r1) {
    auto x = st_.energies_mut();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = hermite(x[i], x1_[i], h * dx0_[i], h * dx1_[i], s);
    if (!cfg_.freeze_resource)
      st_.resource = std::clamp(hermite(st_.resource, r1, h * dr0_, h * dr1_, s), 0.0, p_.rates().r_max);
    st_.time = tau;
    cache_valid_ = false;
  }

  const SimConfig& cfg_;
  const ModelParams& p_;
  Rng rng_;
  double ceiling_;
  PopulationState st_;
  Trajectory tr_;
  std::vector<double> edges_;
  FlowWorkspace ws_;

  bool cache_valid_ = false;
  std::vector<double> dx0_, dx1_, x1_, rb0_, rd0_, rb1_, rd1_, cum_;
  double dr0_ = 0.0;
  double dr1_ = 0.0;
};

}  // namespace

SimulationResult simulate_full(const SimConfig& cfg, std::size_t replica) {
  Engine engine(cfg, replica);
  return engine.run();
}

Trajectory simulate(const SimConfig& cfg, std::size_t replica) { return simulate_full(cfg, replica).trajectory; }

std::vector<Trajectory> run_ensemble(const SimConfig& cfg, std::size_t replicas, std::size_t threads) {
  cfg.check();
  std::vector<Trajectory> out(replicas);
  threads = std::max<std::size_t>(1, std::min(threads, replicas));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t r = next++; r < replicas; r = next++) {
      try {
        out[r] = simulate(cfg, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace egf
