#include "mcx/kernels.hpp"

#include <gsl/gsl_interp.h>
#include <gsl/gsl_spline.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "mcx/common.hpp"
#include "mcx/fft.hpp"
#include "mcx/quadrature.hpp"

namespace mcx {

double exact_log_layer(int b, int j, double t) {
  if (b < 2) throw ArgumentError("exact_log_layer: base must be >= 2");
  if (j < 0) throw ArgumentError("exact_log_layer: layer index must be >= 0");
  double a = std::abs(t);
  double bj = std::pow(static_cast<double>(b), j);
  double lo = 1.0 / (bj * b);  // b^-(j+1)
  double hi = 1.0 / bj;        // b^-j
  double v = 0.0;
  // int_(lo,hi] (u-a)+ du/u^2, antiderivative ln u + a/u
  if (a <= lo) {
    v = std::log(static_cast<double>(b)) - a * bj * (b - 1.0);
  } else if (a <= hi) {
    v = std::log(hi / a) + a * bj - 1.0;
  }
  if (j == 0) v += std::max(0.0, 1.0 - a);  // atom of nu at u = 1
  return v;
}

double bump_h(const BumpSpec& spec, double v) {
  double s = spec.support_end;
  if (spec.h) return (v <= 0.0 || v >= s) ? 0.0 : spec.h(v);
  if (v <= 0.0 || v >= s) return 0.0;
  return std::exp(4.0 / (s * s) - 1.0 / (v * (s - v)));
}

namespace {

struct SplineHolder {
  gsl_spline* spline = nullptr;
  ~SplineHolder() {
    if (spline) gsl_spline_free(spline);
  }
};

std::shared_ptr<void> make_steffen(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  auto holder = std::make_shared<SplineHolder>();
  holder->spline = gsl_spline_alloc(gsl_interp_steffen, x.size());
  if (!holder->spline) throw ResourceError("gsl_spline_alloc failed");
  gsl_spline_init(holder->spline, x.data(), y.data(), x.size());
  return holder;
}

}  // namespace

RadialProfile::RadialProfile(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() < 3 || x_.size() != y_.size()) {
    throw ArgumentError("RadialProfile: need >= 3 matching nodes");
  }
  for (size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw ArgumentError("RadialProfile: nodes not increasing");
  }
  support_ = x_.back();
  spline_ = make_steffen(x_, y_);
}

double RadialProfile::operator()(double r) const {
  r = std::abs(r);
  if (!spline_) throw ContractError("RadialProfile: empty profile");
  if (r >= support_) return 0.0;
  if (r <= x_.front()) return y_.front();
  auto* holder = static_cast<SplineHolder*>(spline_.get());
  // NULL accel keeps evaluation thread-safe (plain bisection lookup)
  return gsl_spline_eval(holder->spline, r, nullptr);
}

namespace {

// scan (1 - Phi)/v^2 on nodes and midpoints
double certify_second_order(const RadialProfile& phi, const std::vector<double>& xs) {
  double c = 0.0;
  for (size_t i = 1; i < xs.size(); ++i) {
    for (double v : {xs[i], 0.5 * (xs[i] + xs[i - 1])}) {
      if (v <= 0.0) continue;
      c = std::max(c, (1.0 - phi(v)) / (v * v));
    }
  }
  return c;
}

RadialProfile selfconvolve_1d(const BumpSpec& spec, int n_points) {
  double s = spec.support_end;
  double rad = std::sqrt(s);     // support radius of h(|x|^2)
  double supp = 2.0 * rad;       // support radius of Phi
  std::vector<double> xs(n_points), ys(n_points);
  for (int i = 0; i < n_points; ++i) {
    xs[i] = supp * static_cast<double>(i) / static_cast<double>(n_points - 1);
  }
  for (int i = 0; i < n_points; ++i) {
    double r = xs[i];
    double lo = r - rad, hi = rad;
    if (lo >= hi) {
      ys[i] = 0.0;
      continue;
    }
    ys[i] = integrate(
        [&](double x) { return bump_h(spec, (x - r) * (x - r)) * bump_h(spec, x * x); },
        lo, hi, 1e-14, 1e-11);
  }
  double phi0 = ys[0];
  if (!(phi0 > 0.0)) throw ArgumentError("bump_selfconvolve: h is identically zero");
  for (double& y : ys) y = std::max(0.0, y / phi0);
  ys.back() = 0.0;
  RadialProfile p(std::move(xs), std::move(ys));
  return p;
}

RadialProfile selfconvolve_2d_fft(const BumpSpec& spec, int n_points) {
  // Sample H(x) = h(|x|^2) on a periodic [-1,1)^2 grid with the origin at
  // index 0, convolve by FFT.  H is C-infinity with compact support, so the
  // trapezoid sampling is superalgebraically accurate.
  const int64_t n = 2048;
  const double dx = 2.0 / static_cast<double>(n);
  std::vector<std::complex<double>> a(static_cast<size_t>(n * n));
  for (int64_t i = 0; i < n; ++i) {
    double x = (i < n / 2 ? i : i - n) * dx;
    for (int64_t k = 0; k < n; ++k) {
      double y = (k < n / 2 ? k : k - n) * dx;
      a[static_cast<size_t>(i * n + k)] = bump_h(spec, x * x + y * y);
    }
  }
  std::vector<int64_t> dims{n, n};
  fft::dft(dims, a.data(), a.data(), -1);
  for (auto& z : a) z *= z;
  fft::dft(dims, a.data(), a.data(), +1);
  double scale = dx * dx / static_cast<double>(n * n);

  double supp = 2.0 * std::sqrt(spec.support_end);
  int64_t n_nodes = std::min<int64_t>(n / 2, n_points);
  std::vector<double> xs, ys;
  double phi0 = a[0].real() * scale;
  if (!(phi0 > 0.0)) throw ArgumentError("bump_selfconvolve: h is identically zero");
  for (int64_t k = 0; k < n_nodes; ++k) {
    double r = k * dx;
    xs.push_back(r);
    ys.push_back(std::max(0.0, a[static_cast<size_t>(k * n)].real() * scale / phi0));
    if (r >= supp) break;
  }
  if (xs.back() < supp) {
    xs.push_back(supp);
    ys.push_back(0.0);
  }
  ys.back() = 0.0;
  return RadialProfile(std::move(xs), std::move(ys));
}

}  // namespace

RadialProfile bump_selfconvolve(const BumpSpec& spec, int d, int n_points) {
  if (!(spec.support_end > 0.0 && spec.support_end <= 0.25 + 1e-15)) {
    throw ArgumentError("bump_selfconvolve: supp(h) must sit inside [0, 1/4]");
  }
  if (n_points < 16) throw ArgumentError("bump_selfconvolve: mesh too small");
  // validate a custom h on a scan of its declared support
  double hmax = 0.0;
  for (int i = 1; i < 4096; ++i) {
    double v = spec.support_end * i / 4096.0;
    double hv = bump_h(spec, v);
    if (hv < 0.0) throw ArgumentError("bump_selfconvolve: h takes negative values");
    hmax = std::max(hmax, hv);
  }
  if (!(hmax > 0.0)) throw ArgumentError("bump_selfconvolve: h is identically zero");

  RadialProfile p;
  if (d == 1) {
    p = selfconvolve_1d(spec, n_points);
  } else if (d == 2) {
    p = selfconvolve_2d_fft(spec, n_points);
  } else {
    throw ArgumentError("bump_selfconvolve: only d = 1 and d = 2 are supported");
  }
  std::vector<double> mesh;
  for (int i = 0; i <= 2048; ++i) mesh.push_back(p.support() * i / 2048.0);
  p.set_second_order_bound(certify_second_order(p, mesh));
  return p;
}

double star_scale_layer(const RadialProfile& phi, int b, int j, double r) {
  if (b < 2) throw ArgumentError("star_scale_layer: base must be >= 2");
  if (j < 0) throw ArgumentError("star_scale_layer: layer index must be >= 0");
  r = std::abs(r);
  double bj = std::pow(static_cast<double>(b), j);
  if (r == 0.0) return phi(0.0) * std::log(static_cast<double>(b));
  double lo = bj * r;
  if (lo >= phi.support()) return 0.0;
  double hi = std::min(bj * b * r, phi.support());
  return integrate([&](double v) { return phi(v) / v; }, lo, hi);
}

double star_scale_deficit(const RadialProfile& phi, int b, int j, double r) {
  r = std::abs(r);
  double phi0 = phi(0.0);
  if (r == 0.0) return 0.0;
  double bj = std::pow(static_cast<double>(b), j);
  return integrate([&](double u) { return (phi0 - phi(u * r)) / u; }, bj, bj * b);
}

double g_correction(const RadialProfile& phi, double x) {
  if (!(x > 0.0 && x <= 1.0)) {
    throw ArgumentError("g_correction: x must lie in (0, 1]");
  }
  if (x == 1.0) return 0.0;
  return integrate([&](double v) { return v > 0.0 ? (phi(v) - 1.0) / v : 0.0; }, x, 1.0);
}

double g_zero(const RadialProfile& phi) {
  // integrand -> 0 at the origin since 1 - Phi = O(v^2)
  return integrate([&](double v) { return v > 0.0 ? (phi(v) - 1.0) / v : 0.0; }, 0.0,
                   1.0);
}

KernelDecomposition make_exact_log_decomposition(int b) {
  if (b < 2) throw ArgumentError("make_exact_log_decomposition: base must be >= 2");
  KernelDecomposition dec;
  dec.kind = KernelDecomposition::Kind::exact_log;
  dec.b = b;
  dec.alpha0 = 0.5;
  dec.j0 = 1;  // layer 0 carries the atom, K_0(0) = log b + 1
  dec.layer = [b](int j) {
    if (j < 0) throw ArgumentError("layer index must be >= 0");
    LayerKernel k;
    k.j = j;
    double lb = std::log(static_cast<double>(b));
    k.k0 = (j == 0) ? lb + 1.0 : lb;
    k.support = (j == 0) ? 1.0 : std::pow(static_cast<double>(b), -j);
    k.eval = [b, j](double r) { return exact_log_layer(b, j, r); };
    return k;
  };
  return dec;
}

KernelDecomposition make_star_scale_decomposition(const RadialProfile& phi, int b) {
  if (b < 2) throw ArgumentError("make_star_scale_decomposition: base must be >= 2");
  KernelDecomposition dec;
  dec.kind = KernelDecomposition::Kind::star_scale;
  dec.b = b;
  dec.alpha0 = 1.0;
  dec.j0 = 0;
  auto p = std::make_shared<RadialProfile>(phi);
  dec.layer = [p, b](int j) {
    LayerKernel k;
    k.j = j;
    k.k0 = (*p)(0.0) * std::log(static_cast<double>(b));
    k.support = p->support() * std::pow(static_cast<double>(b), -j);
    k.eval = [p, b, j](double r) { return star_scale_layer(*p, b, j, r); };
    return k;
  };
  dec.deficit = [p, b](int j, double r) { return star_scale_deficit(*p, b, j, r); };
  return dec;
}

SigmaRegReport check_sigma_regular(const KernelDecomposition& dec, double alpha0,
                                   int j_max, int k_max, double h1_tol, double h2_tol,
                                   double h3_cap) {
  if (j_max < dec.j0) throw ArgumentError("check_sigma_regular: j_max below j0");
  SigmaRegReport rep;
  rep.alpha0 = alpha0;
  rep.j_max = j_max;
  double lb = std::log(static_cast<double>(dec.b));

  for (int j = 0; j <= j_max; ++j) {
    LayerKernel k = dec.layer(j);
    // H1: nothing survives past the layer support radius (checked from j0 on;
    // the spec support is b^-j, our kernels may vanish even earlier)
    if (j >= dec.j0) {
      double claim = std::pow(static_cast<double>(dec.b), -j);
      for (double f : {1.0 + 1e-6, 1.01, 1.1, 1.5, 2.0}) {
        double r = claim * f;
        double v = std::abs(k.eval(r));
        if (v > std::abs(rep.h1.worst_value)) {
          rep.h1.worst_value = v;
          rep.h1.worst_j = j;
          rep.h1.worst_t = r;
        }
        if (v > h1_tol) rep.h1.pass = false;
      }
      // H2': K_j(0) = log b
      double dev = std::abs(k.eval(0.0) - lb);
      if (dev > std::abs(rep.h2.worst_value)) {
        rep.h2.worst_value = dev;
        rep.h2.worst_j = j;
        rep.h2.worst_t = 0.0;
      }
      if (dev > h2_tol) rep.h2.pass = false;
    }
    // H3 on the origin-anchored mesh
    double bj = std::pow(static_cast<double>(dec.b), j);
    for (int kk = 0; kk <= k_max; ++kk) {
      double r = std::pow(2.0, -kk) / bj;
      double deficit = dec.deficit ? std::abs(dec.deficit(j, r))
                                   : std::abs(k.k0 - k.eval(r));
      double denom = std::pow(bj, 2.0 * alpha0) * std::pow(r, 2.0 * alpha0);
      double ratio = deficit / denom;
      if (ratio > rep.h3.worst_value) {
        rep.h3.worst_value = ratio;
        rep.h3.worst_j = j;
        rep.h3.worst_t = r;
      }
    }
  }
  rep.h3.pass = rep.h3.worst_value <= h3_cap;
  rep.pass = rep.h1.pass && rep.h2.pass && rep.h3.pass;
  return rep;
}

PsdReport check_positive_definite(const std::function<double(double)>& kernel,
                                  double window, int n_samples, int pad_factor,
                                  double rel_tol) {
  if (!(window > 0.0)) throw ArgumentError("check_positive_definite: window <= 0");
  if (n_samples < 8 || pad_factor < 2) {
    throw ArgumentError("check_positive_definite: grid too small");
  }
  double delta = window / n_samples;
  int64_t len = 1;
  while (len < static_cast<int64_t>(2) * n_samples * pad_factor) len <<= 1;
  std::vector<std::complex<double>> a(static_cast<size_t>(len), 0.0);
  a[0] = kernel(0.0);
  for (int k = 1; k <= n_samples; ++k) {
    double v = kernel(k * delta);
    a[static_cast<size_t>(k)] = v;
    a[static_cast<size_t>(len - k)] = v;
  }
  std::vector<int64_t> dims{len};
  fft::dft(dims, a.data(), a.data(), -1);
  PsdReport rep;
  rep.min_value = 1e300;
  rep.max_value = -1e300;
  int64_t worst_m = 0;
  for (int64_t m = 0; m < len; ++m) {
    double s = a[static_cast<size_t>(m)].real() * delta;
    if (s < rep.min_value) {
      rep.min_value = s;
      worst_m = m;
    }
    rep.max_value = std::max(rep.max_value, s);
  }
  int64_t signed_m = worst_m <= len / 2 ? worst_m : worst_m - len;
  rep.worst_frequency = static_cast<double>(signed_m) / (len * delta);
  rep.pass = rep.min_value >= -rel_tol * std::max(rep.max_value, 0.0);
  return rep;
}

GramPsdReport check_positive_definite_gram(
    const std::function<double(double, double)>& kernel, int n_grid, double rel_tol) {
  if (n_grid < 4 || n_grid > 4096) {
    throw ArgumentError("check_positive_definite_gram: n_grid out of range");
  }
  Eigen::MatrixXd m(n_grid, n_grid);
  for (int i = 0; i < n_grid; ++i) {
    double ti = (i + 0.5) / n_grid;
    for (int k = 0; k <= i; ++k) {
      double tk = (k + 0.5) / n_grid;
      double v = kernel(ti, tk);
      m(i, k) = v;
      m(k, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("check_positive_definite_gram: eigensolver failed");
  }
  GramPsdReport rep;
  rep.min_eig = es.eigenvalues().minCoeff();
  rep.max_eig = es.eigenvalues().maxCoeff();
  rep.pass = rep.min_eig >= -rel_tol * std::max(rep.max_eig, 0.0);
  return rep;
}

std::function<double(double, double)> remainder_kernel(
    const std::function<double(double, double)>& G, const RadialProfile& phi,
    double lambda) {
  // tabulate g once; it is monotone increasing from g(0) <= 0 to g(1) = 0
  const int n = 1025;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    xs[i] = x;
    ys[i] = (i == 0) ? g_zero(phi) : g_correction(phi, x);
  }
  auto g_tab = std::make_shared<RadialProfile>(std::move(xs), std::move(ys));
  return [G, g_tab, lambda](double t, double s) {
    double tau = std::abs(t - s);
    double g = tau >= 1.0 ? 0.0 : (*g_tab)(tau);
    double gts = G ? G(t, s) : 0.0;
    return lambda + gts - g;
  };
}

}  // namespace mcx
