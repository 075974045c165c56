#pragma once

#include <functional>

namespace mcx {

// limsup_j sup_t E[P_j(t)^p] as a function of p, for each layer family.
// All profiles equal 1 at p = 1 (mean-one layers).
struct MomentProfile {
  std::function<double(double)> moment;
  double operator()(double p) const { return moment(p); }
};

MomentProfile gmc_profile(double gamma, int b);             // b^(gamma^2 p(p-1)/2)
MomentProfile mrc_profile(double chi, int b);               // b^((p-1) chi)
MomentProfile pmc_profile(double a, double chi, int b);     // b^((a^p - ap + p - 1) chi)
MomentProfile profile_from_weight_moment(std::function<double(double)> sup_moment);

// Theta(p) = d (p-1) log b - log(profile(p)); numeric error if profile <= 0.
double theta(double p, const MomentProfile& profile, int b, int d);

// sup over p in (1, p0] of 2 Theta(p) / (p log b): coarse grid then
// golden-section refinement around the best bracket, |x|-tolerance 1e-12.
struct SupResult {
  double value = 0.0;
  double argmax_p = 1.0;
};
SupResult sup_theta_ratio(const MomentProfile& profile, int b, int d, double p0,
                          int grid_points = 512);

// min(2 alpha0, sup_theta_ratio)
double lf_bound(double alpha0, double p0, const MomentProfile& profile, int b, int d);

// Closed forms.
double d_gamma(double gamma, int d);             // d - g^2 (small g) / (sqrt(2d)-g)^2
double gmc_bound(double gamma, int d, double alpha0);
double d_sigma(double sigma, int b);             // geometric-BM cascade dimension

struct CascadeBoundResult {
  double value = 0.0;       // min(2 alpha0, sup bracket)
  double sup_bracket = 0.0; // sup_p [2d(1-1/p) - 2 log_b sup_t E[W^p]^(1/p)]
  double argmax_p = 1.0;
  bool degenerate = false;  // W == 1 a.s.
};
// sup_moment(p) = sup_t E[W^p]; throws ArgumentError naming p0 when the
// moment condition sup_t E[W^p0] < b^(d(p0-1)) fails.
CascadeBoundResult cascade_bound(const std::function<double(double)>& sup_moment,
                                 int b, int d, double alpha0, double p0,
                                 bool degenerate_weight = false);

}  // namespace mcx
