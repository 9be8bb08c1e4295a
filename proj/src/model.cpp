#include "egf/model.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace egf {

namespace {

constexpr double kExponentTol = 1e-12;

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

bool approx_equal(double a, double b) { return std::abs(a - b) <= kExponentTol; }

double hbar(double y) { return y + y * y; }

void add_violation(AdmissibilityReport& r, std::string name, std::string detail) {
  r.violated_constraints.push_back({std::move(name), std::move(detail)});
}

}  // namespace

void AllometricParams::check() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid parameters: ") + what);
  };
  require(c_alpha > 0 && c_gamma > 0, "C_alpha and C_gamma must be positive");
  // Zero birth or death constants give the degenerate submodels used as oracles.
  require(c_beta >= 0 && c_delta >= 0, "C_beta and C_delta must be nonnegative");
  require(x0 > 0, "x0 must be positive");
  require(kappa > 0, "kappa must be positive");
  require(d_dilution > 0, "D must be positive");
  require(r_max > 0, "R_max must be positive");
  require(chi > 1, "chi must be > 1");
  require(r_in >= 0 && r_in <= r_max, "R_in must lie in [0, R_max]");
  for (double e : {alpha, beta, gamma, delta}) require(std::isfinite(e), "exponents must be finite");
}

ModelParams::ModelParams(AllometricParams rates) : rates_(rates) { rates_.check(); }

double ModelParams::b(double x) const {
  return x > rates_.x0 ? power_law(rates_.c_beta, x, rates_.beta) : 0.0;
}
double ModelParams::d(double x) const { return power_law(rates_.c_delta, x, rates_.delta); }
double ModelParams::ell(double x) const { return power_law(rates_.c_alpha, x, rates_.alpha); }
double ModelParams::psi(double x) const { return power_law(rates_.c_gamma, x, rates_.gamma); }
double ModelParams::phi(double r) const { return r / (rates_.kappa + r); }

double ModelParams::g_bar(double x) const {
  const double l = ell(x);
  return std::max(l, phi(rates_.r_max) * psi(x) - l);
}

double ModelParams::renewal(double r) const { return rates_.d_dilution * (rates_.r_in - r); }

double ModelParams::renewal_sup() const {
  // Affine in R, so the sup of |.| sits at an end of [0, r_max].
  return std::max(std::abs(renewal(0.0)), std::abs(renewal(rates_.r_max)));
}

RateSample eval_rates(const ModelParams& p, double x, double r) {
  if (!(x > 0.0)) throw std::domain_error(fmt("eval_rates: energy must be positive, got %g", x));
  if (!(r >= 0.0 && r <= p.rates().r_max))
    throw std::domain_error(fmt("eval_rates: resource %g outside [0, %g]", r, p.rates().r_max));
  RateSample s;
  s.b = p.b(x);
  s.d = p.d(x);
  s.ell = p.ell(x);
  s.psi = p.psi(x);
  s.phi = p.phi(r);
  s.f = s.phi * s.psi;
  s.g = s.f - s.ell;
  return s;
}

WeightFunction::WeightFunction(double kappa1, double kappa2) : kappa1_(kappa1), kappa2_(kappa2) {
  if (!(kappa1 >= 0.0) || !(kappa1 <= kappa2))
    throw std::domain_error(fmt("make_weight: need 0 <= kappa1 <= kappa2, got (%g, %g)", kappa1, kappa2));
}

double WeightFunction::eval(double x) const {
  if (kappa1_ == kappa2_) return kappa1_ == 0.0 ? 1.0 : std::pow(x, kappa1_);
  return std::exp(kappa1_ * std::log(x) + (kappa2_ - kappa1_) * std::log1p(x));
}

double WeightFunction::deriv(double x) const {
  return eval(x) * (kappa1_ / x + (kappa2_ - kappa1_) / (1.0 + x));
}

WeightFunction make_weight(double kappa1, double kappa2) { return WeightFunction(kappa1, kappa2); }

bool AdmissibilityReport::has_violation(const std::string& name) const {
  return std::any_of(violated_constraints.begin(), violated_constraints.end(),
                     [&](const Violation& v) { return v.name == name; });
}

AdmissibilityReport& AdmissibilityReport::merge(const AdmissibilityReport& other) {
  if (other.h0_h1_evaluated && !h0_h1_evaluated) {
    h0_h1_evaluated = true;
    h0_ok = other.h0_ok;
    h1_ok = other.h1_ok;
  } else if (other.h0_h1_evaluated) {
    h0_ok = h0_ok && other.h0_ok;
    h1_ok = h1_ok && other.h1_ok;
  }
  if (other.weight_evaluated) {
    weight_evaluated = true;
    weight_ok = other.weight_ok;
  }
  if (other.finallejd_evaluated) {
    finallejd_evaluated = true;
    finallejd_ok = other.finallejd_ok;
    eta_used = other.eta_used;
    eta_max = other.eta_max;
  }
  for (const auto& v : other.violated_constraints)
    if (!has_violation(v.name)) violated_constraints.push_back(v);
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  return *this;
}

nlohmann::json to_json(const AdmissibilityReport& r) {
  nlohmann::json j;
  auto verdict = [](bool evaluated, bool ok) -> nlohmann::json {
    if (!evaluated) return nullptr;
    return ok;
  };
  j["h0_ok"] = verdict(r.h0_h1_evaluated, r.h0_ok);
  j["h1_ok"] = verdict(r.h0_h1_evaluated, r.h1_ok);
  j["weight_ok"] = verdict(r.weight_evaluated, r.weight_ok);
  j["finallejd_ok"] = verdict(r.finallejd_evaluated, r.finallejd_ok);
  j["eta_used"] = r.eta_used ? nlohmann::json(*r.eta_used) : nlohmann::json(nullptr);
  j["eta_max"] = r.eta_max ? nlohmann::json(*r.eta_max) : nlohmann::json(nullptr);
  j["violated_constraints"] = nlohmann::json::array();
  for (const auto& v : r.violated_constraints)
    j["violated_constraints"].push_back({{"name", v.name}, {"detail", v.detail}});
  j["notes"] = r.notes;
  return j;
}

AdmissibilityReport validate_h0_h1(const AllometricParams& p) {
  AdmissibilityReport r;
  r.h0_h1_evaluated = true;
  const bool gamma_eq = approx_equal(p.gamma, p.alpha);
  const bool c_order = p.c_gamma > p.c_alpha;
  const bool delta_ok = p.delta <= p.alpha - 1.0 + kExponentTol;
  r.h0_ok = gamma_eq && c_order;
  r.h1_ok = delta_ok;
  if (!delta_ok) add_violation(r, "delta <= alpha - 1", fmt("delta = %g > alpha - 1 = %g", p.delta, p.alpha - 1.0));
  if (!gamma_eq) add_violation(r, "gamma = alpha", fmt("gamma = %g != alpha = %g", p.gamma, p.alpha));
  if (!c_order) add_violation(r, "C_gamma > C_alpha", fmt("C_gamma = %g <= C_alpha = %g", p.c_gamma, p.c_alpha));
  return r;
}

AdmissibilityReport validate_weight_region(const AllometricParams& p, double kappa1, double kappa2) {
  AdmissibilityReport r = validate_h0_h1(p);
  r.weight_evaluated = true;
  const double delta = p.delta;
  const std::size_t before = r.violated_constraints.size();

  if (!(kappa1 >= 0.0 && kappa1 <= kappa2))
    add_violation(r, "0 <= kappa1 <= kappa2", fmt("kappa1 = %g, kappa2 = %g", kappa1, kappa2));

  const bool alpha_unit = p.alpha >= 0.0 && p.alpha <= 1.0;
  if (delta > 0.0) {
    add_violation(r, "delta <= 0", fmt("delta = %g > 0: no allometric weight exists", delta));
  } else if (delta < -1.0) {
    if (!(approx_equal(kappa1, -delta) && approx_equal(kappa2, -delta)))
      add_violation(r, "kappa1 = kappa2 = -delta",
                    fmt("kappa1 = %g, kappa2 = %g, -delta = %g", kappa1, kappa2, -delta));
    if (!alpha_unit) add_violation(r, "alpha in [0,1]", fmt("alpha = %g", p.alpha));
    if (!(p.beta <= 2.0 + delta))
      add_violation(r, "beta <= 2 + delta", fmt("beta = %g > 2 + delta = %g", p.beta, 2.0 + delta));
  } else {
    if (!(-delta <= kappa1 + kExponentTol))
      add_violation(r, "-delta <= kappa1", fmt("kappa1 = %g < -delta = %g", kappa1, -delta));
    const double upper = (1.0 - delta) / 2.0;
    if (!(kappa2 <= upper + kExponentTol))
      add_violation(r, "kappa2 <= (1 - delta)/2", fmt("kappa2 = %g > (1 - delta)/2 = %g", kappa2, upper));
    if (!alpha_unit) add_violation(r, "alpha in [0,1]", fmt("alpha = %g", p.alpha));
    if (!(p.beta <= 1.0)) add_violation(r, "beta <= 1", fmt("beta = %g > 1", p.beta));
  }
  r.weight_ok = r.violated_constraints.size() == before;
  if (!r.h0_ok || !r.h1_ok)
    r.notes.push_back("weight region evaluated although growth/survival clauses fail; the case analysis presumes them");
  return r;
}

AdmissibilityReport validate_finallejd(const AllometricParams& p, double kappa1, double kappa2) {
  AdmissibilityReport r;
  r.finallejd_evaluated = true;
  auto holds = [&](double eta) {
    const double cap = std::max(kappa2, 1.0 - eta);
    return kappa1 <= p.alpha && p.alpha <= cap && p.beta <= cap;
  };
  // Both upper clauses only get easier as eta decreases, so a witness exists
  // iff each holds in the eta -> 0+ limit (strictly below 1 unless kappa2 covers it).
  const bool lower = kappa1 <= p.alpha;
  const bool alpha_upper = p.alpha <= kappa2 || p.alpha < 1.0;
  const bool beta_upper = p.beta <= kappa2 || p.beta < 1.0;
  r.finallejd_ok = lower && alpha_upper && beta_upper;
  r.notes.push_back(
      "eta exists iff kappa1 <= alpha, (alpha <= kappa2 or alpha < 1) and (beta <= kappa2 or beta < 1)");

  if (!lower) add_violation(r, "kappa1 <= alpha", fmt("kappa1 = %g > alpha = %g", kappa1, p.alpha));
  if (!alpha_upper)
    add_violation(r, "alpha <= max(kappa2, 1 - eta)", fmt("alpha = %g >= 1 and > kappa2 = %g", p.alpha, kappa2));
  if (!beta_upper)
    add_violation(r, "beta <= max(kappa2, 1 - eta)", fmt("beta = %g >= 1 and > kappa2 = %g", p.beta, kappa2));

  if (r.finallejd_ok) {
    for (int k = 1; k <= 999; ++k) {
      const double eta = k / 1000.0;
      if (!holds(eta)) continue;
      if (!r.eta_used) r.eta_used = eta;
      r.eta_max = eta;
    }
    if (!r.eta_used) {
      // Only etas finer than 1/1000 work (alpha or beta within 1e-3 of 1).
      double top = 0.0;
      if (p.alpha > kappa2) top = std::max(top, p.alpha);
      if (p.beta > kappa2) top = std::max(top, p.beta);
      r.eta_used = (1.0 - top) / 2.0;
      r.eta_max = r.eta_used;
      r.notes.push_back("no eta on the 1/1000 lattice works; reporting the analytic witness (1 - max)/2");
    }
  }
  return r;
}

AdmissibilityReport check_h0_numeric(const ModelParams& p, const std::vector<double>& grid) {
  AdmissibilityReport r;
  const double r_max = p.rates().r_max;
  for (double x : grid) {
    const double lo = p.g(x, 0.0);
    const double hi = p.g(x, r_max);
    if (!(lo < 0.0)) {
      add_violation(r, "g(x, 0) < 0", fmt("g(%g, 0) = %g", x, lo));
      break;
    }
    if (!(hi > 0.0)) {
      add_violation(r, "g(x, R_max) > 0", fmt("g(%g, R_max) = %g", x, hi));
      break;
    }
  }
  return r;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo && n >= 2)) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

WeightCheckReport check_weight_assumption_numeric(const ModelParams& p, const WeightFunction& w,
                                                  const std::vector<double>& grid) {
  WeightCheckReport rep;
  const std::size_t n = grid.size();
  if (n < 3) {
    rep.reason = "grid too small";
    return rep;
  }
  const double x0 = p.rates().x0;
  const double w_x0 = w.eval(x0);
  std::vector<double> rg(n), rb(n), rd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid[i];
    const double denom = 1.0 + x + w.eval(x);
    rg[i] = p.g_bar(x) * (1.0 + w.deriv(x)) / denom;
    rb[i] = x > x0 ? p.b(x) * (1.0 + hbar(std::abs(w_x0 + w.eval(x - x0) - w.eval(x)))) / denom : 0.0;
    rd[i] = p.d(x) * hbar(w.eval(x)) / denom;
    for (double v : {rg[i], rb[i], rd[i]}) {
      if (!std::isfinite(v) && !rep.offending_x) {
        rep.offending_x = x;
        rep.reason = "non-finite ratio";
      }
    }
  }
  rep.sup_ratio_g = *std::max_element(rg.begin(), rg.end());
  rep.sup_ratio_b = *std::max_element(rb.begin(), rb.end());
  rep.sup_ratio_d = *std::max_element(rd.begin(), rd.end());
  if (rep.offending_x) return rep;

  const std::size_t edge = std::max<std::size_t>(1, n / 20);
  auto stable = [&](const std::vector<double>& ratio, const char* name) {
    std::vector<double> interior;
    for (std::size_t i = edge; i + edge < n; ++i)
      if (ratio[i] > 0.0) interior.push_back(ratio[i]);
    double ref = 0.0;
    if (!interior.empty()) {
      auto mid = interior.begin() + static_cast<std::ptrdiff_t>(interior.size() / 2);
      std::nth_element(interior.begin(), mid, interior.end());
      ref = *mid;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= edge && i + edge < n) continue;
      if (ratio[i] > 10.0 * ref) {
        rep.offending_x = grid[i];
        rep.reason = std::string(name) + " ratio grows at the grid extreme";
        return false;
      }
    }
    return true;
  };
  rep.pass = stable(rg, "growth") && stable(rb, "birth") && stable(rd, "death");
  return rep;
}

double max_energy_bound(const AllometricParams& p, double x_max, double t) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0))
    throw std::domain_error(fmt("max_energy_bound: alpha = %g outside (0, 1)", p.alpha));
  const double c = p.r_max / (p.kappa + p.r_max) * p.c_gamma - p.c_alpha;
  if (c <= 0.0) return x_max;
  const double e = 1.0 - p.alpha;
  return std::pow(std::pow(x_max, e) + e * c * t, 1.0 / e);
}

}  // namespace egf
