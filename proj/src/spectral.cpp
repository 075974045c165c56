#include "mcx/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcx/common.hpp"
#include "mcx/fft.hpp"

namespace mcx {

namespace {

constexpr double kTiny = 1e-300;  // log guard for exact zeros

int64_t ipow64(int64_t base, int exp) {
  int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// integral of e^{-2 pi i n t} over one cell of width h, left endpoint 0
std::complex<double> cell_factor(int64_t n, double h) {
  if (n == 0) return {h, 0.0};
  const double a = 2.0 * std::numbers::pi * static_cast<double>(n);
  const std::complex<double> num = 1.0 - std::polar(1.0, -a * h);
  return num / std::complex<double>(0.0, a);
}

// shared band scan over a nonnegative power array laid out like a spectrum
std::vector<BandStat> band_scan(const std::vector<double>& power, int d,
                                int64_t n_max, int b) {
  if (b < 2) throw ArgumentError("base must be >= 2");
  int l_max = 0;
  while (ipow64(b, l_max + 1) <= n_max) ++l_max;
  std::vector<BandStat> out(static_cast<size_t>(l_max));
  std::vector<int64_t> thresholds(static_cast<size_t>(l_max) + 1);
  for (int l = 0; l <= l_max; ++l) {
    const int64_t p = ipow64(b, l);
    thresholds[static_cast<size_t>(l)] = p * p;
  }
  for (int l = 1; l <= l_max; ++l) out[static_cast<size_t>(l - 1)].band = l;

  const int64_t side = 2 * n_max + 1;
  int64_t total = 1;
  for (int a = 0; a < d; ++a) total *= side;

  std::vector<int64_t> n(d);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    int64_t norm2 = 0;
    for (int a = d - 1; a >= 0; --a) {
      const int64_t c = rem % side - n_max;
      rem /= side;
      n[a] = c;
      norm2 += c * c;
    }
    // band 0 (|n| <= 1) and anything past the last complete band are dropped
    if (norm2 <= thresholds[0] || norm2 > thresholds[static_cast<size_t>(l_max)]) continue;
    int band = 1;
    while (norm2 > thresholds[static_cast<size_t>(band)]) ++band;
    BandStat& s = out[static_cast<size_t>(band - 1)];
    const double sq = power[static_cast<size_t>(flat)];
    const double log_freq = 0.5 * std::log(static_cast<double>(norm2));
    if (s.count == 0 || sq > s.max_sq) {
      s.max_sq = sq;
      s.log_freq_at_max = log_freq;
    }
    s.mean_sq += sq;
    s.mean_log_sq += std::log(std::max(sq, kTiny));
    s.mean_log_freq += log_freq;
    ++s.count;
  }
  for (auto& s : out) {
    if (s.count == 0) continue;
    const double c = static_cast<double>(s.count);
    s.mean_sq /= c;
    s.mean_log_sq /= c;
    s.mean_log_freq /= c;
  }
  return out;
}

std::vector<double> power_of(const FourierSpectrum& s) {
  std::vector<double> p(s.coef.size());
  for (size_t i = 0; i < p.size(); ++i) p[i] = std::norm(s.coef[i]);
  return p;
}

// trim and fit a band table; y is -log(stat), slope is the decay exponent
LineFit fit_bands(const std::vector<BandStat>& bands, const FitOptions& fit,
                  bool use_max, int* lo_out, int* hi_out) {
  if (fit.drop_low < 0 || fit.drop_high < 0)
    throw ArgumentError("band trim counts must be >= 0");
  const int lo = fit.drop_low;
  const int hi = static_cast<int>(bands.size()) - fit.drop_high;
  if (hi - lo < 3)
    throw ArgumentError("need at least 3 bands after trimming to fit a slope");
  std::vector<double> x, y;
  for (int i = lo; i < hi; ++i) {
    const BandStat& s = bands[static_cast<size_t>(i)];
    if (s.count == 0) continue;
    if (use_max) {
      x.push_back(s.log_freq_at_max);
      y.push_back(-std::log(std::max(s.max_sq, kTiny)));
    } else {
      x.push_back(s.mean_log_freq);
      y.push_back(-s.mean_log_sq);
    }
  }
  if (x.size() < 3)
    throw ArgumentError("need at least 3 nonempty bands to fit a slope");
  *lo_out = bands[static_cast<size_t>(lo)].band;
  *hi_out = bands[static_cast<size_t>(hi - 1)].band;
  return fit_line(x, y);
}

}  // namespace

const std::complex<double>& FourierSpectrum::at(const std::vector<int64_t>& n) const {
  if (static_cast<int>(n.size()) != d)
    throw ArgumentError("frequency has the wrong dimension");
  int64_t flat = 0;
  for (int a = 0; a < d; ++a) {
    if (n[a] < -n_max || n[a] > n_max)
      throw ArgumentError("frequency outside the computed window");
    flat = flat * n_side + (n[a] + n_max);
  }
  return coef[static_cast<size_t>(flat)];
}

double FourierSpectrum::total_mass() const {
  int64_t flat = 0;
  for (int a = 0; a < d; ++a) flat = flat * n_side + n_max;
  return coef[static_cast<size_t>(flat)].real();
}

FourierSpectrum fourier_coefficients(const DensityField& field, int64_t n_max) {
  const BAdicGrid& g = field.grid;
  if (n_max < 1) throw ArgumentError("frequency bound must be >= 1");
  if (2 * n_max > g.n_axis)
    throw ArgumentError("frequency bound exceeds the grid Nyquist limit");

  // full-grid DFT of the cell values
  std::vector<std::complex<double>> in(field.values.begin(), field.values.end());
  std::vector<std::complex<double>> v(in.size());
  std::vector<int64_t> dims(g.d, g.n_axis);
  fft::dft(dims, in.data(), v.data(), -1);

  const double h = g.cell_width();
  std::vector<std::complex<double>> factor(static_cast<size_t>(2 * n_max + 1));
  for (int64_t n = -n_max; n <= n_max; ++n)
    factor[static_cast<size_t>(n + n_max)] = cell_factor(n, h);

  FourierSpectrum s;
  s.d = g.d;
  s.n_max = n_max;
  s.n_side = 2 * n_max + 1;
  int64_t total = 1;
  for (int a = 0; a < g.d; ++a) total *= s.n_side;
  s.coef.resize(static_cast<size_t>(total));

  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    std::complex<double> f(1.0, 0.0);
    int64_t v_flat = 0;
    for (int a = g.d - 1; a >= 0; --a) {
      const int64_t n = rem % s.n_side - n_max;
      rem /= s.n_side;
      f *= factor[static_cast<size_t>(n + n_max)];
      const int64_t r = ((n % g.n_axis) + g.n_axis) % g.n_axis;
      v_flat += r * ipow64(g.n_axis, g.d - 1 - a);
    }
    s.coef[static_cast<size_t>(flat)] = f * v[static_cast<size_t>(v_flat)];
  }
  return s;
}

std::vector<BandStat> band_statistics(const FourierSpectrum& spectrum, int b) {
  return band_scan(power_of(spectrum), spectrum.d, spectrum.n_max, b);
}

FourierDimAccumulator::FourierDimAccumulator(int d, int64_t n_max, int b,
                                             FitOptions fit)
    : d_(d), n_max_(n_max), b_(b), fit_(fit) {
  int64_t total = 1;
  for (int a = 0; a < d; ++a) total *= 2 * n_max + 1;
  power_sum_.assign(static_cast<size_t>(total), 0.0);
}

void FourierDimAccumulator::add(const FourierSpectrum& spectrum) {
  if (spectrum.d != d_ || spectrum.n_max != n_max_)
    throw ArgumentError("spectrum shape does not match the accumulator");
  const std::vector<double> power = power_of(spectrum);
  for (size_t i = 0; i < power.size(); ++i) power_sum_[i] += power[i];
  const std::vector<BandStat> bands = band_scan(power, d_, n_max_, b_);
  int lo = 0, hi = 0;
  const LineFit f = fit_bands(bands, fit_, /*use_max=*/true, &lo, &hi);
  pathwise_slopes_.push_back(f.slope);
  ++count_;
}

std::vector<BandStat> FourierDimAccumulator::mean_band_statistics() const {
  if (count_ == 0) throw ArgumentError("no spectra accumulated");
  std::vector<double> mean(power_sum_.size());
  for (size_t i = 0; i < mean.size(); ++i)
    mean[i] = power_sum_[i] / static_cast<double>(count_);
  return band_scan(mean, d_, n_max_, b_);
}

DimensionEstimate FourierDimAccumulator::estimate(FourierDimMode mode) const {
  if (count_ == 0) throw ArgumentError("no spectra accumulated");
  DimensionEstimate est;
  if (mode == FourierDimMode::ensemble_mean) {
    const std::vector<BandStat> bands = mean_band_statistics();
    const LineFit f = fit_bands(bands, fit_, /*use_max=*/false, &est.band_lo,
                                &est.band_hi);
    est.slope = f.slope;
    est.intercept = f.intercept;
    est.std_error = f.std_error;
    est.method = "fourier-ensemble";
    return est;
  }
  // pathwise: average of per-sample slopes
  double mean = 0.0;
  for (double s : pathwise_slopes_) mean += s;
  mean /= static_cast<double>(count_);
  double var = 0.0;
  for (double s : pathwise_slopes_) var += (s - mean) * (s - mean);
  est.slope = mean;
  est.std_error = count_ > 1 ? std::sqrt(var / static_cast<double>(count_ - 1) /
                                         static_cast<double>(count_))
                             : 0.0;
  // band range is shared across samples by construction
  std::vector<BandStat> bands = mean_band_statistics();
  est.band_lo = bands[static_cast<size_t>(fit_.drop_low)].band;
  est.band_hi = bands[bands.size() - 1 - static_cast<size_t>(fit_.drop_high)].band;
  est.method = "fourier-pathwise";
  return est;
}

DimensionEstimate estimate_fourier_dim(const std::vector<FourierSpectrum>& ensemble,
                                       int b, FourierDimMode mode, FitOptions fit) {
  if (ensemble.empty()) throw ArgumentError("empty spectrum ensemble");
  FourierDimAccumulator acc(ensemble[0].d, ensemble[0].n_max, b, fit);
  for (const auto& s : ensemble) acc.add(s);
  return acc.estimate(mode);
}

double weighted_lq_norm(const FourierSpectrum& spectrum, double tau, double q) {
  if (!(q >= 2.0)) throw ArgumentError("lq exponent must be >= 2");
  if (!(tau >= 0.0)) throw ArgumentError("weight exponent tau must be >= 0");
  const int64_t side = spectrum.n_side;
  int64_t total = 1;
  for (int a = 0; a < spectrum.d; ++a) total *= side;
  const int64_t cap = spectrum.n_max * spectrum.n_max;
  double sum = 0.0;
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    int64_t norm2 = 0;
    for (int a = spectrum.d - 1; a >= 0; --a) {
      const int64_t c = rem % side - spectrum.n_max;
      rem /= side;
      norm2 += c * c;
    }
    if (norm2 == 0 || norm2 > cap) continue;
    const double mag = std::abs(spectrum.coef[static_cast<size_t>(flat)]);
    if (mag == 0.0) continue;
    // (|n|^{tau/2} |coef|)^q with |n|^2 kept as an exact integer
    sum += std::pow(static_cast<double>(norm2), 0.25 * tau * q) * std::pow(mag, q);
  }
  return std::pow(sum, 1.0 / q);
}

EnergyIdentity spectral_energy_identity(const DensityField& field) {
  const BAdicGrid& g = field.grid;
  std::vector<std::complex<double>> in(field.values.begin(), field.values.end());
  std::vector<std::complex<double>> v(in.size());
  std::vector<int64_t> dims(g.d, g.n_axis);
  fft::dft(dims, in.data(), v.data(), -1);

  const double h = g.cell_width();
  double h2d = 1.0;
  for (int a = 0; a < g.d; ++a) h2d *= h * h;
  long double lattice = 0.0L;
  for (const auto& c : v) lattice += std::norm(c);
  long double grid_l2 = 0.0L;
  for (double val : field.values) grid_l2 += static_cast<long double>(val) * val;
  double hd = 1.0;
  for (int a = 0; a < g.d; ++a) hd *= h;

  EnergyIdentity out;
  out.lattice_sum = static_cast<double>(lattice) * h2d;
  out.grid_l2 = static_cast<double>(grid_l2) * hd;
  return out;
}

MartingaleDiagnostic martingale_diagnostic(
    const std::function<DensityField(int m, uint64_t sample_id)>& sampler, double tau,
    double p, double q, double p0, double alpha0, int d,
    const std::vector<int>& m_range, int64_t samples, int64_t n_max) {
  if (!(alpha0 > 0.0)) throw ArgumentError("alpha0 must be positive");
  if (!(tau >= 0.0) || !(tau < 2.0 * alpha0))
    throw ArgumentError("tau must lie in [0, 2 alpha0)");
  const double cap =
      std::max(2.0, 2.0 * static_cast<double>(d) / (2.0 * alpha0 - tau));
  if (!(p > 1.0) || !(p <= p0) || !(p0 <= cap) || !(cap < q))
    throw ArgumentError(
        "moment parameters must satisfy 1 < p <= p0 <= max{2, 2d/(2 alpha0 - tau)} < q");
  if (m_range.size() < 3)
    throw ArgumentError("the diagnostic needs at least 3 martingale levels");
  if (samples < 2) throw ArgumentError("the diagnostic needs at least 2 samples");

  MartingaleDiagnostic diag;
  for (int m : m_range) {
    double mean = 0.0, m2 = 0.0;
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(samples));
    for (int64_t s = 0; s < samples; ++s) {
      const DensityField field = sampler(m, static_cast<uint64_t>(s));
      const FourierSpectrum spec = fourier_coefficients(field, n_max);
      vals.push_back(std::pow(weighted_lq_norm(spec, tau, q), p));
    }
    for (double v : vals) mean += v;
    mean /= static_cast<double>(samples);
    for (double v : vals) m2 += (v - mean) * (v - mean);
    const double se =
        std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
    diag.m_values.push_back(m);
    diag.mean_norm_p.push_back(mean);
    diag.std_error.push_back(se);
  }

  const size_t len = diag.m_values.size();
  const size_t k = std::max<size_t>(1, len / 3);
  double first = 0.0, last = 0.0, se_first = 0.0, se_last = 0.0;
  for (size_t i = 0; i < k; ++i) {
    first += diag.mean_norm_p[i];
    se_first += diag.std_error[i] * diag.std_error[i];
    last += diag.mean_norm_p[len - 1 - i];
    se_last += diag.std_error[len - 1 - i] * diag.std_error[len - 1 - i];
  }
  first /= static_cast<double>(k);
  last /= static_cast<double>(k);
  se_first = std::sqrt(se_first) / static_cast<double>(k);
  se_last = std::sqrt(se_last) / static_cast<double>(k);
  diag.first_third = first;
  diag.last_third = last;
  const double band = 3.0 * std::sqrt(se_first * se_first + se_last * se_last);
  diag.bounded = last <= first + band;
  diag.verdict = diag.bounded ? "consistent with bounded" : "growth detected";
  return diag;
}

std::vector<double> correlation_sums(const DensityField& field,
                                     const std::vector<int>& levels) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (int k : levels) {
    if (k < 0 || k > field.grid.level)
      throw ArgumentError("correlation level outside the grid range");
    const DensityField coarse = coarsen(field, k);
    double cell_vol = 1.0;
    for (int a = 0; a < coarse.grid.d; ++a) cell_vol *= coarse.grid.cell_width();
    long double s2 = 0.0L;
    for (double v : coarse.values) {
      const long double mass = static_cast<long double>(v) * cell_vol;
      s2 += mass * mass;
    }
    out.push_back(static_cast<double>(s2));
  }
  return out;
}

DimensionEstimate correlation_dim(const DensityField& field,
                                  const std::vector<int>& levels) {
  if (levels.size() < 3)
    throw ArgumentError("correlation dimension needs at least 3 levels");
  const std::vector<double> s2 = correlation_sums(field, levels);
  const double logb = std::log(static_cast<double>(field.grid.b));
  std::vector<double> x, y;
  for (size_t i = 0; i < levels.size(); ++i) {
    x.push_back(-static_cast<double>(levels[i]) * logb);  // log delta
    y.push_back(std::log(std::max(s2[i], kTiny)));
  }
  const LineFit f = fit_line(x, y);
  DimensionEstimate est;
  est.slope = f.slope;
  est.intercept = f.intercept;
  est.std_error = f.std_error;
  est.band_lo = levels.front();
  est.band_hi = levels.back();
  est.method = "correlation";
  return est;
}

std::vector<int64_t> box_counts(const std::vector<uint8_t>& mask, const BAdicGrid& grid,
                                const std::vector<int>& levels) {
  if (static_cast<int64_t>(mask.size()) != grid.n_cells)
    throw ArgumentError("mask size does not match the grid");
  std::vector<int64_t> out;
  out.reserve(levels.size());
  std::vector<int64_t> idx(grid.d);
  for (int k : levels) {
    if (k < 0 || k > grid.level)
      throw ArgumentError("box-count level outside the grid range");
    const BAdicGrid cg = make_grid(grid.d, grid.b, k);
    const int64_t q = grid.n_axis / cg.n_axis;
    std::vector<uint8_t> occ(static_cast<size_t>(cg.n_cells), 0);
    for (int64_t f = 0; f < grid.n_cells; ++f) {
      if (!mask[static_cast<size_t>(f)]) continue;
      int64_t rem = f;
      for (int a = grid.d - 1; a >= 0; --a) {
        idx[a] = rem % grid.n_axis;
        rem /= grid.n_axis;
      }
      int64_t coarse = 0;
      for (int a = 0; a < grid.d; ++a) coarse = coarse * cg.n_axis + idx[a] / q;
      occ[static_cast<size_t>(coarse)] = 1;
    }
    int64_t count = 0;
    for (uint8_t v : occ) count += v;
    out.push_back(count);
  }
  return out;
}

DimensionEstimate box_dim_mask(const std::vector<uint8_t>& mask, const BAdicGrid& grid,
                               const std::vector<int>& levels) {
  if (levels.size() < 3)
    throw ArgumentError("box-counting needs at least 3 levels");

  DimensionEstimate est;
  est.method = "box-count";
  est.band_lo = levels.front();
  est.band_hi = levels.back();

  const std::vector<int64_t> counts = box_counts(mask, grid, levels);
  bool any = false;
  for (int64_t c : counts)
    if (c > 0) {
      any = true;
      break;
    }
  if (!any) {
    est.degenerate = true;
    return est;
  }

  const double logb = std::log(static_cast<double>(grid.b));
  std::vector<double> x, y;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (counts[i] == 0) continue;
    x.push_back(static_cast<double>(levels[i]) * logb);  // log(1/delta)
    y.push_back(std::log(static_cast<double>(counts[i])));
  }
  if (x.size() < 3) {
    est.degenerate = true;
    return est;
  }
  const LineFit f = fit_line(x, y);
  est.slope = f.slope;
  est.intercept = f.intercept;
  est.std_error = f.std_error;
  return est;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ArgumentError("line fit needs at least 2 matched points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ArgumentError("line fit needs at least 2 distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      rss += r * r;
    }
    f.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

}  // namespace mcx
