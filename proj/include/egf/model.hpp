#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace egf {

// Power-law (allometric) rates with a Monod functional response and a
// chemostat resource renewal.
struct AllometricParams {
  double alpha = 0.75;
  double beta = -0.25;
  double gamma = 0.75;
  double delta = -0.25;
  double c_alpha = 1.0;
  double c_beta = 0.1;
  double c_gamma = 2.0;
  double c_delta = 0.05;
  double x0 = 1.0;
  double kappa = 5.0;
  double chi = 200.0;
  double r_in = 2.0;
  double d_dilution = 0.275;
  double r_max = 2.0;

  // Throws std::invalid_argument naming the first violated invariant.
  void check() const;
};

struct RateSample {
  double b = 0.0;
  double d = 0.0;
  double ell = 0.0;
  double psi = 0.0;
  double phi = 0.0;
  double f = 0.0;
  double g = 0.0;
};

class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(AllometricParams rates);

  const AllometricParams& rates() const { return rates_; }

  double b(double x) const;
  double d(double x) const;
  double ell(double x) const;
  double psi(double x) const;
  double phi(double r) const;
  double f(double x, double r) const { return phi(r) * psi(x); }
  double g(double x, double r) const { return f(x, r) - ell(x); }
  // sup over R in [0, r_max] of |g(x, R)|.
  double g_bar(double x) const;
  // Resource renewal D (r_in - R).
  double renewal(double r) const;
  // sup over [0, r_max] of |renewal|.
  double renewal_sup() const;

 private:
  AllometricParams rates_;
};

// Full rate record at (x, r). Throws std::domain_error when x <= 0 or r is
// outside [0, r_max].
RateSample eval_rates(const ModelParams& p, double x, double r);

// omega(x) = x^k1 (1 + x)^(k2 - k1), a C^1 weight behaving like x^k1 near 0
// and x^k2 near infinity.
class WeightFunction {
 public:
  WeightFunction() = default;
  WeightFunction(double kappa1, double kappa2);

  double kappa1() const { return kappa1_; }
  double kappa2() const { return kappa2_; }
  double eval(double x) const;
  double deriv(double x) const;
  double operator()(double x) const { return eval(x); }

 private:
  double kappa1_ = 0.0;
  double kappa2_ = 0.0;
};

WeightFunction make_weight(double kappa1, double kappa2);

struct Violation {
  std::string name;    // e.g. "gamma = alpha"
  std::string detail;  // the offending inequality with numbers substituted
};

struct AdmissibilityReport {
  bool h0_h1_evaluated = false;
  bool h0_ok = false;
  bool h1_ok = false;
  bool weight_evaluated = false;
  bool weight_ok = false;
  bool finallejd_evaluated = false;
  bool finallejd_ok = false;
  std::optional<double> eta_used;
  // Largest k/1000 witness, so the admissible eta range is [eta_used, eta_max].
  std::optional<double> eta_max;
  std::vector<Violation> violated_constraints;
  std::vector<std::string> notes;

  bool has_violation(const std::string& name) const;
  // Combines two partial reports; evaluated verdicts on the right win.
  AdmissibilityReport& merge(const AdmissibilityReport& other);
};

nlohmann::json to_json(const AdmissibilityReport& report);

// Growth and survival structure of the allometric family:
// H0 and H1 hold iff delta <= alpha - 1, gamma == alpha and C_gamma > C_alpha.
AdmissibilityReport validate_h0_h1(const AllometricParams& p);

// Case analysis of which allometric weights control growth, birth and death.
// Also evaluates validate_h0_h1 into the report.
AdmissibilityReport validate_weight_region(const AllometricParams& p,
                                           double kappa1, double kappa2);

// Moment condition used to identify limits:
// exists eta in (0,1) with kappa1 <= alpha <= max(kappa2, 1 - eta) and
// beta <= max(kappa2, 1 - eta).
AdmissibilityReport validate_finallejd(const AllometricParams& p,
                                       double kappa1, double kappa2);

// Pointwise check of g(x, 0) < 0 < g(x, r_max) on a grid.
AdmissibilityReport check_h0_numeric(const ModelParams& p,
                                     const std::vector<double>& grid);

struct WeightCheckReport {
  double sup_ratio_g = 0.0;
  double sup_ratio_b = 0.0;
  double sup_ratio_d = 0.0;
  bool pass = false;
  std::optional<double> offending_x;
  std::string reason;
};

// Empirical version of the three weight inequalities over a positive sorted
// grid. Each ratio is LHS / (1 + x + omega(x)); a ratio passes when it is
// finite everywhere and its values over the outer 5% of the grid on each end
// stay within 10x of the median over the interior (nonzero values only).
WeightCheckReport check_weight_assumption_numeric(const ModelParams& p,
                                                  const WeightFunction& w,
                                                  const std::vector<double>& grid);

std::vector<double> log_grid(double lo, double hi, std::size_t n);

// Energy ceiling under maximal resources starting from x_max:
// (x_max^(1-a) + (1-a) c t)^(1/(1-a)), c = phi(r_max) C_gamma - C_alpha.
// Returns x_max when c <= 0. Throws std::domain_error unless 0 < alpha < 1.
double max_energy_bound(const AllometricParams& p, double x_max, double t);

// C * x^e evaluated in the log domain so that tiny x with very negative
// exponents does not go through an intermediate underflow.
inline double power_law(double c, double x, double e) {
  if (e == 0.0) return c;
  return std::exp(std::log(c) + e * std::log(x));
}

}  // namespace egf
