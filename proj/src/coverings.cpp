#include "mcx/coverings.hpp"

#include <algorithm>
#include <cmath>

#include <gsl/gsl_sf_psi.h>

#include "mcx/common.hpp"
#include "mcx/quadrature.hpp"
#include "mcx/rng.hpp"

namespace mcx {

namespace {

// harmonic partial sum over integers n in [lo, hi]: H_hi - H_{lo-1}
double harmonic_range(double lo, double hi) {
  if (hi < lo) return 0.0;
  return gsl_sf_psi(hi + 1.0) - gsl_sf_psi(lo);
}

struct BandWindow {
  double lo = 0.0;
  double hi = 0.0;
};

BandWindow band_window(int b, int j) {
  if (b < 2) throw ArgumentError("base must be >= 2");
  if (j < 1) throw ArgumentError("band index must be >= 1");
  BandWindow w;
  w.lo = std::pow(static_cast<double>(b), -j);
  w.hi = std::pow(static_cast<double>(b), -(j - 1));
  return w;
}

// canonical band: atoms alpha/n with n in (alpha b^{j-1}, alpha b^j]
void canonical_range(double alpha, int b, int j, double* n_lo, double* n_hi) {
  *n_lo = std::floor(alpha * std::pow(static_cast<double>(b), j - 1)) + 1.0;
  *n_hi = std::floor(alpha * std::pow(static_cast<double>(b), j));
}

void check_a(double a) {
  if (!(a > 0.0) || !(a < 1.0)) throw ArgumentError("a must lie in (0,1)");
}

// cells whose center falls in the open interval (x, x+y)
void center_range(double x, double y, const BAdicGrid& grid, int64_t* i_min,
                  int64_t* i_max) {
  const double h = grid.cell_width();
  *i_min = static_cast<int64_t>(std::floor(x / h - 0.5)) + 1;
  *i_max = static_cast<int64_t>(std::ceil((x + y) / h - 0.5)) - 1;
  *i_min = std::max<int64_t>(*i_min, 0);
  *i_max = std::min<int64_t>(*i_max, grid.n_cells - 1);
}

}  // namespace

LambdaMeasure LambdaMeasure::canonical_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ArgumentError("canonical intensity needs alpha in (0,1)");
  LambdaMeasure l;
  l.canonical = true;
  l.alpha = alpha;
  return l;
}

LambdaMeasure LambdaMeasure::from_atoms(std::vector<std::pair<double, double>> atoms) {
  LambdaMeasure l;
  for (const auto& [y, w] : atoms) {
    if (!(y > 0.0) || !(y < 1.0)) throw ArgumentError("atom locations must lie in (0,1)");
    if (!(w >= 0.0)) throw ArgumentError("atom masses must be >= 0");
  }
  l.atoms = std::move(atoms);
  return l;
}

LambdaMeasure LambdaMeasure::from_density(std::function<double(double)> density) {
  LambdaMeasure l;
  l.density = std::move(density);
  return l;
}

BandMasses band_masses(const LambdaMeasure& lambda, int b, int j) {
  const BandWindow w = band_window(b, j);
  BandMasses out;
  if (lambda.canonical) {
    double n_lo = 0.0, n_hi = 0.0;
    canonical_range(lambda.alpha, b, j, &n_lo, &n_hi);
    if (n_hi >= n_lo) {
      out.mass = n_hi - n_lo + 1.0;
      out.y_mass = lambda.alpha * harmonic_range(n_lo, n_hi);
    }
    return out;
  }
  for (const auto& [y, wgt] : lambda.atoms) {
    if (y >= w.lo && y < w.hi) {
      out.mass += wgt;
      out.y_mass += wgt * y;
    }
  }
  if (lambda.density) {
    out.mass += integrate([&](double y) { return lambda.density(y); }, w.lo, w.hi);
    out.y_mass += integrate([&](double y) { return y * lambda.density(y); }, w.lo, w.hi);
  }
  return out;
}

double chi(const LambdaMeasure& lambda, int b, int j_count) {
  if (j_count < 20)
    throw ArgumentError("the limsup surrogate needs at least 20 bands");
  const double logb = std::log(static_cast<double>(b));
  double best = 0.0;
  for (int j = j_count / 2 + 1; j <= j_count; ++j)
    best = std::max(best, band_masses(lambda, b, j).y_mass / logb);
  return best;
}

double chi_min(const LambdaMeasure& lambda, const std::vector<int>& bases, int j_count) {
  if (bases.empty()) throw ArgumentError("chi_min needs at least one base");
  double best = chi(lambda, bases[0], j_count);
  for (size_t i = 1; i < bases.size(); ++i)
    best = std::min(best, chi(lambda, bases[i], j_count));
  return best;
}

PppBandSample sample_ppp_band(const LambdaMeasure& lambda, int b, int j,
                              uint64_t master_seed, uint64_t sample_id) {
  const BandWindow w = band_window(b, j);
  PppBandSample out;
  out.j = j;
  out.y_lo = w.lo;
  out.y_hi = w.hi;
  out.masses = band_masses(lambda, b, j);

  RngStream rng(master_seed, sample_id, static_cast<uint64_t>(j), 0);

  if (lambda.canonical) {
    double n_lo = 0.0, n_hi = 0.0;
    canonical_range(lambda.alpha, b, j, &n_lo, &n_hi);
    if (n_hi >= n_lo) {
      const double count = n_hi - n_lo + 1.0;
      const uint64_t n_pts = rng.poisson(2.0 * count);
      out.points.reserve(n_pts);
      for (uint64_t k = 0; k < n_pts; ++k) {
        double idx = std::floor(rng.uniform() * count);
        idx = std::min(idx, count - 1.0);
        const double y = lambda.alpha / (n_lo + idx);
        out.points.emplace_back(rng.uniform(-1.0, 1.0), y);
      }
    }
    return out;
  }

  // discrete part: atoms weighted by mass
  double atom_mass = 0.0;
  std::vector<std::pair<double, double>> in_band;
  for (const auto& [y, wgt] : lambda.atoms) {
    if (y >= w.lo && y < w.hi && wgt > 0.0) {
      in_band.emplace_back(y, wgt);
      atom_mass += wgt;
    }
  }
  if (atom_mass > 0.0) {
    const uint64_t n_pts = rng.poisson(2.0 * atom_mass);
    for (uint64_t k = 0; k < n_pts; ++k) {
      double u = rng.uniform() * atom_mass;
      double y = in_band.back().first;
      for (const auto& [ay, awgt] : in_band) {
        if (u < awgt) {
          y = ay;
          break;
        }
        u -= awgt;
      }
      out.points.emplace_back(rng.uniform(-1.0, 1.0), y);
    }
  }

  // absolutely continuous part: inversion through a tabulated band CDF
  if (lambda.density) {
    const double dens_mass =
        integrate([&](double y) { return lambda.density(y); }, w.lo, w.hi);
    if (dens_mass > 0.0) {
      constexpr int kNodes = 513;
      std::vector<double> ys(kNodes), cdf(kNodes, 0.0);
      const double dy = (w.hi - w.lo) / (kNodes - 1);
      for (int i = 0; i < kNodes; ++i) ys[i] = w.lo + i * dy;
      for (int i = 1; i < kNodes; ++i) {
        const double f0 = std::max(0.0, lambda.density(ys[i - 1]));
        const double f1 = std::max(0.0, lambda.density(ys[i]));
        cdf[i] = cdf[i - 1] + 0.5 * (f0 + f1) * dy;
      }
      const uint64_t n_pts = rng.poisson(2.0 * dens_mass);
      for (uint64_t k = 0; k < n_pts; ++k) {
        const double target = rng.uniform() * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        const size_t hi = std::min<size_t>(
            std::max<size_t>(1, static_cast<size_t>(it - cdf.begin())), kNodes - 1);
        const double seg = cdf[hi] - cdf[hi - 1];
        const double frac = seg > 0.0 ? (target - cdf[hi - 1]) / seg : 0.5;
        const double y = ys[hi - 1] + frac * dy;
        out.points.emplace_back(rng.uniform(-1.0, 1.0), y);
      }
    }
  }
  return out;
}

std::vector<double> mrc_layer(const PppBandSample& band, const BAdicGrid& grid,
                              std::vector<uint8_t>* covered) {
  if (grid.d != 1) throw ArgumentError("coverings are one-dimensional");
  std::vector<uint8_t> hit(static_cast<size_t>(grid.n_cells), 0);
  for (const auto& [x, y] : band.points) {
    int64_t i_min = 0, i_max = 0;
    center_range(x, y, grid, &i_min, &i_max);
    for (int64_t i = i_min; i <= i_max; ++i) hit[static_cast<size_t>(i)] = 1;
  }
  const double norm = std::exp(band.masses.y_mass);
  std::vector<double> layer(static_cast<size_t>(grid.n_cells));
  for (size_t i = 0; i < layer.size(); ++i) layer[i] = hit[i] ? 0.0 : norm;
  if (covered) *covered = std::move(hit);
  return layer;
}

double mrc_layer_at(const PppBandSample& band, double t) {
  for (const auto& [x, y] : band.points)
    if (x < t && t < x + y) return 0.0;
  return std::exp(band.masses.y_mass);
}

std::vector<double> pmc_layer(const PppBandSample& band, double a,
                              const BAdicGrid& grid) {
  check_a(a);
  if (grid.d != 1) throw ArgumentError("coverings are one-dimensional");
  std::vector<uint32_t> count(static_cast<size_t>(grid.n_cells), 0);
  for (const auto& [x, y] : band.points) {
    int64_t i_min = 0, i_max = 0;
    center_range(x, y, grid, &i_min, &i_max);
    for (int64_t i = i_min; i <= i_max; ++i) ++count[static_cast<size_t>(i)];
  }
  const double norm = std::exp((1.0 - a) * band.masses.y_mass);
  std::vector<double> layer(static_cast<size_t>(grid.n_cells));
  for (size_t i = 0; i < layer.size(); ++i)
    layer[i] = std::pow(a, static_cast<double>(count[i])) * norm;
  return layer;
}

double pmc_layer_at(const PppBandSample& band, double a, double t) {
  check_a(a);
  int64_t count = 0;
  for (const auto& [x, y] : band.points)
    if (x < t && t < x + y) ++count;
  return std::pow(a, static_cast<double>(count)) *
         std::exp((1.0 - a) * band.masses.y_mass);
}

MrcSample sample_mrc(const LambdaMeasure& lambda, int b, int m, int grid_level,
                     uint64_t master_seed, uint64_t sample_id) {
  if (m < 0) throw ArgumentError("layer count must be >= 0");
  if (grid_level < m) throw ArgumentError("grid level must be >= the layer count");
  MrcSample out;
  out.field = make_unit_field(make_grid(1, b, grid_level));
  out.field.m = 0;  // layer 0 is the constant 1
  std::vector<uint8_t> covered;
  for (int j = 1; j <= m; ++j) {
    const PppBandSample band = sample_ppp_band(lambda, b, j, master_seed, sample_id);
    multiply_layer(out.field, mrc_layer(band, out.field.grid, &covered));
  }
  out.uncovered.resize(out.field.values.size());
  for (size_t i = 0; i < out.uncovered.size(); ++i)
    out.uncovered[i] = out.field.values[i] > 0.0 ? 1 : 0;
  return out;
}

DensityField sample_pmc(const LambdaMeasure& lambda, double a, int b, int m,
                        int grid_level, uint64_t master_seed, uint64_t sample_id) {
  check_a(a);
  if (m < 0) throw ArgumentError("layer count must be >= 0");
  if (grid_level < m) throw ArgumentError("grid level must be >= the layer count");
  DensityField field = make_unit_field(make_grid(1, b, grid_level));
  field.m = 0;
  for (int j = 1; j <= m; ++j) {
    const PppBandSample band = sample_ppp_band(lambda, b, j, master_seed, sample_id);
    multiply_layer(field, pmc_layer(band, a, field.grid));
  }
  return field;
}

double mrc_moment_oracle(double y_mass, double p) {
  return std::exp((p - 1.0) * y_mass);
}

double pmc_moment_oracle(double y_mass, double a, double p) {
  check_a(a);
  return std::exp((std::pow(a, p) - a * p + p - 1.0) * y_mass);
}

double covering_covariance_oracle(const LambdaMeasure& lambda, int b, int j, double t,
                                  double s, std::optional<double> a) {
  if (t < 0.0 || t > 1.0 || s < 0.0 || s > 1.0)
    throw ArgumentError("evaluation points must lie in [0,1]");
  if (a) check_a(*a);
  const BandWindow w = band_window(b, j);
  const double tau = std::abs(t - s);

  // Lambda-area of the overlap of the two covering triangles:
  // integral over the band of (y - tau)_+
  double overlap = 0.0;
  if (lambda.canonical) {
    double n_lo = 0.0, n_hi = 0.0;
    canonical_range(lambda.alpha, b, j, &n_lo, &n_hi);
    double n_star = n_hi;
    if (tau > 0.0) n_star = std::min(n_hi, std::floor(lambda.alpha / tau));
    if (n_star >= n_lo)
      overlap = lambda.alpha * harmonic_range(n_lo, n_star) -
                tau * (n_star - n_lo + 1.0);
  } else {
    for (const auto& [y, wgt] : lambda.atoms)
      if (y >= w.lo && y < w.hi) overlap += wgt * std::max(0.0, y - tau);
    if (lambda.density && tau < w.hi) {
      const double lo = std::max(w.lo, tau);
      overlap +=
          integrate([&](double y) { return (y - tau) * lambda.density(y); }, lo, w.hi);
    }
  }

  if (a) return std::exp((1.0 - *a) * (1.0 - *a) * overlap);
  return std::exp(overlap);
}

}  // namespace mcx
