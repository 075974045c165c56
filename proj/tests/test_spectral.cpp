#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mcx/badic.hpp"
#include "mcx/common.hpp"
#include "mcx/rng.hpp"
#include "mcx/spectral.hpp"

using namespace mcx;

namespace {

DensityField random_field(int d, int b, int level, uint64_t seed) {
  DensityField f = make_unit_field(make_grid(d, b, level));
  RngStream rng(seed, 0, 0, 0);
  for (double& v : f.values) v = 0.2 + rng.uniform();
  return f;
}

// quadratic-time oracle: coefficient as an explicit sum over cells of the
// closed-form character integral
std::complex<double> naive_coefficient(const DensityField& f,
                                       const std::vector<int64_t>& n) {
  const BAdicGrid& g = f.grid;
  const double h = g.cell_width();
  std::complex<double> acc(0.0, 0.0);
  for (int64_t flat = 0; flat < g.n_cells; ++flat) {
    const std::vector<double> v = min_vertex(g, multi_index(g, flat));
    std::complex<double> cell(1.0, 0.0);
    for (int a = 0; a < g.d; ++a) {
      const double w = 2.0 * std::numbers::pi * double(n[size_t(a)]);
      std::complex<double> seg;
      if (n[size_t(a)] == 0) {
        seg = {h, 0.0};
      } else {
        seg = (1.0 - std::polar(1.0, -w * h)) / std::complex<double>(0.0, w);
      }
      cell *= std::polar(1.0, -w * v[size_t(a)]) * seg;
    }
    acc += f.values[size_t(flat)] * cell;
  }
  return acc;
}

// synthetic spectrum with |coef(n)|^2 = |n|^{-s} exactly
FourierSpectrum power_law_spectrum(int d, int64_t n_max, double s) {
  FourierSpectrum spec;
  spec.d = d;
  spec.n_max = n_max;
  spec.n_side = 2 * n_max + 1;
  int64_t total = 1;
  for (int a = 0; a < d; ++a) total *= spec.n_side;
  spec.coef.resize(size_t(total));
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat, norm2 = 0;
    for (int a = 0; a < d; ++a) {
      const int64_t c = rem % spec.n_side - n_max;
      rem /= spec.n_side;
      norm2 += c * c;
    }
    spec.coef[size_t(flat)] =
        norm2 == 0 ? 1.0 : std::pow(double(norm2), -0.25 * s);
  }
  return spec;
}

}  // namespace

TEST_CASE("fourier coefficients match the naive oracle") {
  for (int d : {1, 2}) {
    const DensityField f = random_field(d, 2, d == 1 ? 3 : 2, 77);
    const int64_t n_max = d == 1 ? 4 : 2;  // includes the Nyquist edge
    const FourierSpectrum spec = fourier_coefficients(f, n_max);
    std::vector<int64_t> n(size_t(d), -n_max);
    const int64_t side = 2 * n_max + 1;
    int64_t total = 1;
    for (int a = 0; a < d; ++a) total *= side;
    for (int64_t flat = 0; flat < total; ++flat) {
      int64_t rem = flat;
      for (int a = d - 1; a >= 0; --a) {
        n[size_t(a)] = rem % side - n_max;
        rem /= side;
      }
      const std::complex<double> want = naive_coefficient(f, n);
      CHECK(std::abs(spec.at(n) - want) < 1e-12);
    }
    CHECK(spec.total_mass() == doctest::Approx(total_mass(f)).epsilon(1e-12));
  }
}

TEST_CASE("lebesgue spectrum is a point mass at zero") {
  const DensityField f = make_unit_field(make_grid(1, 2, 8));
  const FourierSpectrum spec = fourier_coefficients(f, 64);
  CHECK(spec.at({0}) == std::complex<double>(spec.total_mass(), 0.0));
  CHECK(spec.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  for (int64_t n = -64; n <= 64; ++n) {
    if (n == 0) continue;
    CHECK(std::abs(spec.at({n})) < 1e-12);
  }
}

TEST_CASE("fourier coefficient window and argument errors") {
  const DensityField f = random_field(1, 2, 3, 5);
  CHECK_THROWS_AS(fourier_coefficients(f, 0), ArgumentError);
  CHECK_THROWS_AS(fourier_coefficients(f, 5), ArgumentError);  // past Nyquist
  const FourierSpectrum spec = fourier_coefficients(f, 4);
  CHECK_THROWS_AS(spec.at({5}), ArgumentError);
  CHECK_THROWS_AS(spec.at({0, 0}), ArgumentError);
}

TEST_CASE("band statistics by hand") {
  // d=1, b=2, n_max=4: band 1 is |n| in (1,2], band 2 is |n| in (2,4]
  FourierSpectrum spec;
  spec.d = 1;
  spec.n_max = 4;
  spec.n_side = 9;
  spec.coef = {{0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}, {0.4, 0.0}, {9.0, 0.0},
               {0.5, 0.0}, {0.6, 0.0}, {0.7, 0.0}, {0.8, 0.0}};
  const std::vector<BandStat> bands = band_statistics(spec, 2);
  REQUIRE(bands.size() == 2);
  CHECK(bands[0].band == 1);
  CHECK(bands[0].count == 2);  // n = -2, 2
  CHECK(bands[0].max_sq == doctest::Approx(0.36).epsilon(1e-14));
  CHECK(bands[0].mean_sq == doctest::Approx(0.5 * (0.09 + 0.36)).epsilon(1e-14));
  CHECK(bands[0].mean_log_sq ==
        doctest::Approx(0.5 * (std::log(0.09) + std::log(0.36))).epsilon(1e-14));
  CHECK(bands[0].mean_log_freq == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bands[0].log_freq_at_max == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bands[1].band == 2);
  CHECK(bands[1].count == 4);  // n = -4, -3, 3, 4
  CHECK(bands[1].max_sq == doctest::Approx(0.64).epsilon(1e-14));
  const double m2 = 0.25 * (0.01 + 0.04 + 0.49 + 0.64);
  CHECK(bands[1].mean_sq == doctest::Approx(m2).epsilon(1e-14));
  CHECK(bands[1].mean_log_freq ==
        doctest::Approx(0.5 * (std::log(3.0) + std::log(4.0))).epsilon(1e-14));
}

TEST_CASE("parseval identity on random fields") {
  for (int d : {1, 2}) {
    const DensityField f = random_field(d, 2, d == 1 ? 6 : 3, 11 + d);
    const EnergyIdentity e = spectral_energy_identity(f);
    CHECK(e.lattice_sum == doctest::Approx(e.grid_l2).epsilon(1e-12));
  }
}

TEST_CASE("both estimators recover a pure power law") {
  for (auto [d, n_max, s] : {std::tuple<int, int64_t, double>{1, 128, 0.75},
                             {2, 32, 1.36}}) {
    const FourierSpectrum spec = power_law_spectrum(d, n_max, s);
    FourierDimAccumulator acc(d, n_max, 2, FitOptions{1, 1});
    acc.add(spec);
    acc.add(spec);
    const DimensionEstimate em = acc.estimate(FourierDimMode::ensemble_mean);
    CHECK(std::abs(em.slope - s) < 1e-6);
    CHECK(em.method == "fourier-ensemble");
    const DimensionEstimate ep = acc.estimate(FourierDimMode::pathwise_max);
    CHECK(std::abs(ep.slope - s) < 1e-6);
    CHECK(ep.std_error == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ep.method == "fourier-pathwise");
  }
}

TEST_CASE("accumulator matches hand-rolled ensemble averaging") {
  const int64_t n_max = 32;
  std::vector<FourierSpectrum> ensemble;
  for (uint64_t s = 0; s < 3; ++s)
    ensemble.push_back(fourier_coefficients(random_field(1, 2, 7, 100 + s), n_max));

  FourierDimAccumulator acc(1, n_max, 2, FitOptions{1, 1});
  for (const auto& spec : ensemble) acc.add(spec);
  CHECK(acc.count() == 3);

  // mean band table == band table of a spectrum carrying the mean power
  FourierSpectrum avg;
  avg.d = 1;
  avg.n_max = n_max;
  avg.n_side = 2 * n_max + 1;
  avg.coef.resize(ensemble[0].coef.size());
  for (size_t i = 0; i < avg.coef.size(); ++i) {
    double p = 0.0;
    for (const auto& spec : ensemble) p += std::norm(spec.coef[i]);
    avg.coef[i] = std::sqrt(p / 3.0);
  }
  const std::vector<BandStat> want = band_statistics(avg, 2);
  const std::vector<BandStat> got = acc.mean_band_statistics();
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].count == want[i].count);
    CHECK(got[i].mean_sq == doctest::Approx(want[i].mean_sq).epsilon(1e-12));
    CHECK(got[i].max_sq == doctest::Approx(want[i].max_sq).epsilon(1e-12));
  }

  // pathwise estimate == mean of per-sample max fits over the same bands
  double slope_acc = 0.0;
  for (const auto& spec : ensemble) {
    const std::vector<BandStat> bands = band_statistics(spec, 2);
    std::vector<double> x, y;
    for (size_t i = 1; i + 1 < bands.size(); ++i) {
      x.push_back(bands[i].log_freq_at_max);
      y.push_back(-std::log(bands[i].max_sq));
    }
    slope_acc += fit_line(x, y).slope;
  }
  const DimensionEstimate ep = acc.estimate(FourierDimMode::pathwise_max);
  CHECK(ep.slope == doctest::Approx(slope_acc / 3.0).epsilon(1e-12));

  // the convenience wrapper is the same computation
  const DimensionEstimate ew =
      estimate_fourier_dim(ensemble, 2, FourierDimMode::ensemble_mean, FitOptions{1, 1});
  const DimensionEstimate ea = acc.estimate(FourierDimMode::ensemble_mean);
  CHECK(ew.slope == doctest::Approx(ea.slope).epsilon(1e-15));
  CHECK(ew.band_lo == ea.band_lo);
  CHECK(ew.band_hi == ea.band_hi);

  FourierSpectrum wrong = ensemble[0];
  wrong.n_max = 16;
  CHECK_THROWS_AS(acc.add(wrong), ArgumentError);
  FourierDimAccumulator empty(1, n_max, 2);
  CHECK_THROWS_AS(empty.estimate(FourierDimMode::ensemble_mean), ArgumentError);
}

TEST_CASE("weighted lq norm against a direct sum") {
  const DensityField f = random_field(2, 2, 2, 21);
  const int64_t n_max = 2;
  const FourierSpectrum spec = fourier_coefficients(f, n_max);
  const double tau = 0.5, q = 3.0;
  double sum = 0.0;
  for (int64_t i = -n_max; i <= n_max; ++i) {
    for (int64_t j = -n_max; j <= n_max; ++j) {
      const int64_t norm2 = i * i + j * j;
      if (norm2 == 0 || norm2 > n_max * n_max) continue;  // Euclidean ball
      const double w = std::pow(double(norm2), 0.25 * tau);
      sum += std::pow(w * std::abs(spec.at({i, j})), q);
    }
  }
  CHECK(weighted_lq_norm(spec, tau, q) ==
        doctest::Approx(std::pow(sum, 1.0 / q)).epsilon(1e-12));
  CHECK_THROWS_AS(weighted_lq_norm(spec, tau, 1.5), ArgumentError);
  CHECK_THROWS_AS(weighted_lq_norm(spec, -0.1, q), ArgumentError);
}

TEST_CASE("correlation dimension of exact references") {
  // Lebesgue: S2(b^-k) = b^{-kd}, slope d
  for (int d : {1, 2}) {
    const DensityField f = make_unit_field(make_grid(d, 2, d == 1 ? 6 : 4));
    const std::vector<int> levels = {1, 2, 3, 4};
    const std::vector<double> s2 = correlation_sums(f, levels);
    for (size_t i = 0; i < levels.size(); ++i)
      CHECK(s2[i] == doctest::Approx(std::pow(2.0, -levels[i] * d)).epsilon(1e-12));
    const DimensionEstimate est = correlation_dim(f, levels);
    CHECK(std::abs(est.slope - d) < 1e-12);
    CHECK(est.method == "correlation");
  }

  // a single loaded cell: every coarsening still holds mass 1, slope 0
  DensityField atom = make_unit_field(make_grid(1, 2, 6));
  std::fill(atom.values.begin(), atom.values.end(), 0.0);
  atom.values[5] = 64.0;
  const DimensionEstimate est = correlation_dim(atom, {1, 2, 3, 4, 5});
  CHECK(std::abs(est.slope) < 1e-12);

  CHECK_THROWS_AS(correlation_dim(atom, {1, 2}), ArgumentError);
  CHECK_THROWS_AS(correlation_sums(atom, {7}), ArgumentError);
}

TEST_CASE("box counting on exact masks") {
  const BAdicGrid g = make_grid(1, 2, 6);
  const std::vector<int> levels = {2, 3, 4, 5};

  std::vector<uint8_t> full(size_t(g.n_cells), 1);
  const std::vector<int64_t> counts = box_counts(full, g, levels);
  for (size_t i = 0; i < levels.size(); ++i)
    CHECK(counts[i] == int64_t(1) << levels[i]);
  CHECK(std::abs(box_dim_mask(full, g, levels).slope - 1.0) < 1e-12);

  std::vector<uint8_t> corner(size_t(g.n_cells), 0);
  corner[0] = 1;
  CHECK(std::abs(box_dim_mask(corner, g, levels).slope) < 1e-12);

  std::vector<uint8_t> empty(size_t(g.n_cells), 0);
  const DimensionEstimate deg = box_dim_mask(empty, g, levels);
  CHECK(deg.degenerate);

  // a coordinate line {x=0} in d=2 has box dimension 1
  const BAdicGrid g2 = make_grid(2, 2, 5);
  std::vector<uint8_t> line(size_t(g2.n_cells), 0);
  for (int64_t j = 0; j < g2.n_axis; ++j) line[size_t(j)] = 1;
  CHECK(std::abs(box_dim_mask(line, g2, {1, 2, 3, 4}).slope - 1.0) < 1e-12);

  CHECK_THROWS_AS(box_counts(corner, g, {7}), ArgumentError);
  CHECK_THROWS_AS(box_counts(std::vector<uint8_t>(3, 0), g, levels), ArgumentError);
  CHECK_THROWS_AS(box_dim_mask(full, g, {1, 2}), ArgumentError);
}

TEST_CASE("martingale diagnostic flags growth and boundedness") {
  const BAdicGrid g = make_grid(1, 2, 3);
  const auto make_sampler = [&g](double rate) {
    return [&g, rate](int m, uint64_t) {
      DensityField f = make_unit_field(g);
      for (size_t i = 0; i < f.values.size(); ++i)
        f.values[i] = double(i + 1) * std::pow(rate, m);
      f.m = m;
      return f;
    };
  };
  const std::vector<int> ms = {1, 2, 3, 4, 5, 6};
  const MartingaleDiagnostic flat =
      martingale_diagnostic(make_sampler(1.0), 0.5, 1.5, 3.0, 2.0, 1.0, 1, ms, 4, 4);
  CHECK(flat.bounded);
  CHECK(flat.verdict == "consistent with bounded");
  const MartingaleDiagnostic growing =
      martingale_diagnostic(make_sampler(2.0), 0.5, 1.5, 3.0, 2.0, 1.0, 1, ms, 4, 4);
  CHECK_FALSE(growing.bounded);
  CHECK(growing.verdict == "growth detected");
  CHECK(growing.m_values.size() == ms.size());

  const auto s = make_sampler(1.0);
  CHECK_THROWS_AS(martingale_diagnostic(s, 2.5, 1.5, 3.0, 2.0, 1.0, 1, ms, 4, 4),
                  ArgumentError);  // tau >= 2 alpha0
  CHECK_THROWS_AS(martingale_diagnostic(s, 0.5, 1.0, 3.0, 2.0, 1.0, 1, ms, 4, 4),
                  ArgumentError);  // p must exceed 1
  CHECK_THROWS_AS(martingale_diagnostic(s, 0.5, 1.5, 2.0, 2.0, 1.0, 1, ms, 4, 4),
                  ArgumentError);  // q must exceed the cap
  CHECK_THROWS_AS(martingale_diagnostic(s, 0.5, 1.5, 3.0, 2.0, 1.0, 1, {1, 2}, 4, 4),
                  ArgumentError);
  CHECK_THROWS_AS(martingale_diagnostic(s, 0.5, 1.5, 3.0, 2.0, 1.0, 1, ms, 1, 4),
                  ArgumentError);
}

TEST_CASE("line fit basics") {
  const std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 - 2.0 * v);
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(f.std_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_line({1.0}, {2.0}), ArgumentError);
  CHECK_THROWS_AS(fit_line({1.0, 2.0}, {1.0, 2.0, 3.0}), ArgumentError);
  CHECK_THROWS_AS(fit_line({1.0, 1.0}, {1.0, 2.0}), ArgumentError);
}
