#include "mcx/theory.hpp"

#include <cmath>
#include <string>

#include "mcx/common.hpp"

namespace mcx {

MomentProfile gmc_profile(double gamma, int b) {
  if (b < 2) throw ArgumentError("gmc_profile: base must be >= 2");
  double lb = std::log(static_cast<double>(b));
  double g2 = gamma * gamma;
  return {[=](double p) { return std::exp(0.5 * g2 * p * (p - 1.0) * lb); }};
}

MomentProfile mrc_profile(double chi, int b) {
  if (b < 2) throw ArgumentError("mrc_profile: base must be >= 2");
  if (chi < 0) throw ArgumentError("mrc_profile: chi must be >= 0");
  double lb = std::log(static_cast<double>(b));
  return {[=](double p) { return std::exp((p - 1.0) * chi * lb); }};
}

MomentProfile pmc_profile(double a, double chi, int b) {
  if (!(a > 0.0 && a < 1.0)) throw ArgumentError("pmc_profile: a must lie in (0,1)");
  if (chi < 0) throw ArgumentError("pmc_profile: chi must be >= 0");
  double lb = std::log(static_cast<double>(b));
  return {[=](double p) {
    return std::exp((std::pow(a, p) - a * p + p - 1.0) * chi * lb);
  }};
}

MomentProfile profile_from_weight_moment(std::function<double(double)> sup_moment) {
  return {std::move(sup_moment)};
}

double theta(double p, const MomentProfile& profile, int b, int d) {
  if (!(p > 1.0)) throw ArgumentError("theta: p must be > 1");
  double v = profile(p);
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw NumericError("theta: moment profile is nonpositive or non-finite at p=" +
                           std::to_string(p),
                       v);
  }
  return d * (p - 1.0) * std::log(static_cast<double>(b)) - std::log(v);
}

namespace {

// golden-section maximization on [lo, hi]
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double x_tol) {
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > x_tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

SupResult sup_theta_ratio(const MomentProfile& profile, int b, int d, double p0,
                          int grid_points) {
  if (!(p0 > 1.0)) throw ArgumentError("sup_theta_ratio: p0 must be > 1");
  if (grid_points < 8) throw ArgumentError("sup_theta_ratio: grid too small");
  double lb = std::log(static_cast<double>(b));
  auto phi = [&](double p) { return 2.0 * theta(p, profile, b, d) / (p * lb); };

  // coarse grid on (1, p0], open at 1 where phi -> 0
  double lo = 1.0 + 1e-6;
  if (p0 <= lo) return {phi(p0), p0};
  double best_p = p0, best_v = phi(p0);
  int n = grid_points;
  for (int i = 0; i < n; ++i) {
    double p = lo + (p0 - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    double v = phi(p);
    if (v > best_v) {
      best_v = v;
      best_p = p;
    }
  }
  double step = (p0 - lo) / static_cast<double>(n - 1);
  double a = std::max(lo, best_p - step);
  double c = std::min(p0, best_p + step);
  double p_star = golden_max(phi, a, c, 1e-12);
  double v_star = phi(p_star);
  // keep the endpoint if refinement did not beat it
  if (best_v > v_star) return {best_v, best_p};
  return {v_star, p_star};
}

double lf_bound(double alpha0, double p0, const MomentProfile& profile, int b, int d) {
  if (!(alpha0 > 0.0)) throw ArgumentError("lf_bound: alpha0 must be > 0");
  SupResult s = sup_theta_ratio(profile, b, d, p0);
  return std::min(2.0 * alpha0, s.value);
}

double d_gamma(double gamma, int d) {
  if (d < 1) throw ArgumentError("d_gamma: dimension must be >= 1");
  double s = std::sqrt(2.0 * d);
  if (!(gamma > 0.0 && gamma < s)) {
    throw ArgumentError("d_gamma: gamma must lie in (0, sqrt(2d))");
  }
  if (gamma < 0.5 * s) return d - gamma * gamma;
  double r = s - gamma;
  return r * r;
}

double gmc_bound(double gamma, int d, double alpha0) {
  if (!(alpha0 > 0.0)) throw ArgumentError("gmc_bound: alpha0 must be > 0");
  return std::min(2.0 * alpha0, d_gamma(gamma, d));
}

double d_sigma(double sigma, int b) {
  if (b < 2) throw ArgumentError("d_sigma: base must be >= 2");
  double lb = std::log(static_cast<double>(b));
  double smax = std::sqrt(2.0 * lb);
  if (!(sigma > 0.0 && sigma < smax)) {
    throw ArgumentError("d_sigma: sigma must lie in (0, sqrt(2 log b))");
  }
  if (sigma < 0.5 * smax) return 1.0 - sigma * sigma / lb;
  double r = std::sqrt(2.0) - sigma / std::sqrt(lb);
  return r * r;
}

CascadeBoundResult cascade_bound(const std::function<double(double)>& sup_moment,
                                 int b, int d, double alpha0, double p0,
                                 bool degenerate_weight) {
  if (!(p0 > 1.0)) throw ArgumentError("cascade_bound: p0 must be > 1");
  if (!(alpha0 > 0.0)) throw ArgumentError("cascade_bound: alpha0 must be > 0");
  CascadeBoundResult r;
  if (degenerate_weight) {
    // W == 1 gives Lebesgue back; the bound machinery is vacuous there.
    r.degenerate = true;
    r.value = std::min(2.0 * alpha0, 2.0 * d);
    r.sup_bracket = 2.0 * d * (1.0 - 1.0 / p0);
    r.argmax_p = p0;
    return r;
  }
  double lb = std::log(static_cast<double>(b));
  double m0 = sup_moment(p0);
  if (!(m0 < std::exp(d * (p0 - 1.0) * lb))) {
    throw ArgumentError("cascade_bound: moment condition fails at p0=" +
                        std::to_string(p0) + ": sup_t E[W^p] = " + std::to_string(m0) +
                        " >= b^(d(p-1)) = " +
                        std::to_string(std::exp(d * (p0 - 1.0) * lb)));
  }
  // 2d(1-1/p) - 2 log_b E[W^p]^(1/p) coincides with 2 Theta(p)/(p log b)
  MomentProfile prof = profile_from_weight_moment(sup_moment);
  SupResult s = sup_theta_ratio(prof, b, d, p0);
  r.sup_bracket = s.value;
  r.argmax_p = s.argmax_p;
  r.value = std::min(2.0 * alpha0, s.value);
  return r;
}

}  // namespace mcx
