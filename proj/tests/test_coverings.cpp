#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "doctest.h"
#include "mcx/badic.hpp"
#include "mcx/common.hpp"
#include "mcx/coverings.hpp"

using namespace mcx;

namespace {

// enumerate the canonical atoms alpha/n that land in band j directly
BandMasses canonical_direct(double alpha, int b, int j) {
  const double y_lo = std::pow(double(b), -j);
  const double y_hi = std::pow(double(b), -(j - 1));
  BandMasses out;
  const int64_t n_max = int64_t(std::ceil(alpha / y_lo)) + 2;
  long double y_acc = 0.0L;
  for (int64_t n = 1; n <= n_max; ++n) {
    const double y = alpha / double(n);
    if (y >= y_lo && y < y_hi) {
      out.mass += 1.0;
      y_acc += (long double)y;
    }
  }
  out.y_mass = double(y_acc);
  return out;
}

}  // namespace

TEST_CASE("canonical band masses match direct atom enumeration") {
  for (double alpha : {0.3, 0.5, 0.7}) {
    for (int b : {2, 3}) {
      const int j_top = b == 2 ? 20 : 13;
      const LambdaMeasure lam = LambdaMeasure::canonical_alpha(alpha);
      for (int j = 1; j <= j_top; ++j) {
        const BandMasses got = band_masses(lam, b, j);
        const BandMasses want = canonical_direct(alpha, b, j);
        CHECK(got.mass == want.mass);
        CHECK(std::abs(got.y_mass - want.y_mass) < 1e-12 * std::max(1.0, want.y_mass));
      }
    }
  }
}

TEST_CASE("atom and density band masses") {
  const LambdaMeasure atoms =
      LambdaMeasure::from_atoms({{0.6, 1.0}, {0.3, 2.0}, {0.1, 0.5}});
  BandMasses b1 = band_masses(atoms, 2, 1);  // [1/2, 1)
  CHECK(b1.mass == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b1.y_mass == doctest::Approx(0.6).epsilon(1e-15));
  BandMasses b2 = band_masses(atoms, 2, 2);  // [1/4, 1/2)
  CHECK(b2.mass == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(b2.y_mass == doctest::Approx(0.6).epsilon(1e-15));
  BandMasses b4 = band_masses(atoms, 2, 4);  // [1/16, 1/8)
  CHECK(b4.mass == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b4.y_mass == doctest::Approx(0.05).epsilon(1e-13));

  const double c = 3.0;
  const LambdaMeasure dens = LambdaMeasure::from_density([c](double) { return c; });
  for (int j : {1, 2, 5}) {
    const double hi = std::pow(2.0, -(j - 1)), lo = std::pow(2.0, -j);
    const BandMasses bm = band_masses(dens, 2, j);
    CHECK(bm.mass == doctest::Approx(c * (hi - lo)).epsilon(1e-10));
    CHECK(bm.y_mass == doctest::Approx(0.5 * c * (hi * hi - lo * lo)).epsilon(1e-10));
  }

  CHECK_THROWS_AS(band_masses(atoms, 2, 0), ArgumentError);
  CHECK_THROWS_AS(band_masses(atoms, 1, 1), ArgumentError);
  CHECK_THROWS_AS(LambdaMeasure::canonical_alpha(1.0), ArgumentError);
  CHECK_THROWS_AS(LambdaMeasure::canonical_alpha(0.0), ArgumentError);
  CHECK_THROWS_AS(LambdaMeasure::from_atoms({{1.2, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(LambdaMeasure::from_atoms({{0.5, -1.0}}), ArgumentError);
}

TEST_CASE("chi of the canonical family is alpha") {
  for (double alpha : {0.3, 0.5, 0.7}) {
    const LambdaMeasure lam = LambdaMeasure::canonical_alpha(alpha);
    CHECK(std::abs(chi(lam, 2, 40) - alpha) < 1e-3);
  }
  CHECK_THROWS_AS(chi(LambdaMeasure::canonical_alpha(0.5), 2, 10), ArgumentError);
}

TEST_CASE("chi_min takes the best base") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.4);
  const double c2 = chi(lam, 2, 40);
  const double c3 = chi(lam, 3, 40);
  const double c4 = chi(lam, 4, 40);
  const double cm = chi_min(lam, {2, 3, 4}, 40);
  CHECK(cm == doctest::Approx(std::min({c2, c3, c4})).epsilon(1e-15));
  CHECK_THROWS_AS(chi_min(lam, {}, 40), ArgumentError);
}

TEST_CASE("poisson band sampling statistics") {
  const double alpha = 0.5;
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(alpha);
  const int b = 2, j = 3;
  const BandMasses bm = band_masses(lam, b, j);
  const int S = 20000;
  double count_acc = 0.0;
  for (int s = 0; s < S; ++s) {
    const PppBandSample band = sample_ppp_band(lam, b, j, 31415, uint64_t(s));
    CHECK(band.masses.mass == bm.mass);
    count_acc += double(band.points.size());
    for (const auto& [x, y] : band.points) {
      CHECK(x >= -1.0);
      CHECK(x < 1.0);
      CHECK(y >= band.y_lo);
      CHECK(y < band.y_hi);
      // y must be one of the atoms alpha/n
      const double n = alpha / y;
      CHECK(std::abs(n - std::round(n)) < 1e-9);
    }
  }
  const double mean = count_acc / S;
  const double want = 2.0 * bm.mass;  // x-window (-1,1) doubles the intensity
  CHECK(std::abs(mean - want) < 3.0 * std::sqrt(want / S));
}

TEST_CASE("covering layer is mean one at a point") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.5);
  const int S = 20000;
  const double t = 0.37;
  const BandMasses bm = band_masses(lam, 2, 2);
  double acc = 0.0, acc_p = 0.0;
  const double a = 0.3;
  for (int s = 0; s < S; ++s) {
    const PppBandSample band = sample_ppp_band(lam, 2, 2, 2718, uint64_t(s));
    acc += mrc_layer_at(band, t);
    acc_p += pmc_layer_at(band, a, t);
  }
  const double var_mrc = std::exp(bm.y_mass) - 1.0;
  CHECK(std::abs(acc / S - 1.0) < 3.0 * std::sqrt(var_mrc / S));
  const double var_pmc = std::exp((1.0 - a) * (1.0 - a) * bm.y_mass) - 1.0;
  CHECK(std::abs(acc_p / S - 1.0) < 3.0 * std::sqrt(var_pmc / S));
}

TEST_CASE("layer moments match the closed forms") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.7);
  const int b = 2, j = 4;
  const BandMasses bm = band_masses(lam, b, j);
  const int S = 20000;
  const double t = 0.52;
  for (double p : {1.5, 2.0}) {
    double acc = 0.0, acc2 = 0.0;
    for (int s = 0; s < S; ++s) {
      const PppBandSample band = sample_ppp_band(lam, b, j, 9000, uint64_t(s));
      const double xp = std::pow(mrc_layer_at(band, t), p);
      acc += xp;
      acc2 += xp * xp;
    }
    const double mean = acc / S;
    const double want = mrc_moment_oracle(bm.y_mass, p);
    const double se = std::sqrt(std::max(acc2 / S - mean * mean, 0.0) / S);
    CHECK(std::abs(mean - want) < 3.0 * se);
  }
  for (double a : {0.3, 0.7}) {
    double acc = 0.0, acc2 = 0.0;
    for (int s = 0; s < S; ++s) {
      const PppBandSample band = sample_ppp_band(lam, b, j, 9001, uint64_t(s));
      const double x2 = std::pow(pmc_layer_at(band, a, t), 2.0);
      acc += x2;
      acc2 += x2 * x2;
    }
    const double mean = acc / S;
    const double want = pmc_moment_oracle(bm.y_mass, a, 2.0);
    const double se = std::sqrt(std::max(acc2 / S - mean * mean, 0.0) / S);
    CHECK(std::abs(mean - want) < 3.0 * se);
  }
}

TEST_CASE("covariance oracle closed form vs direct atom sums") {
  const double alpha = 0.5;
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(alpha);
  const int b = 2, j = 3;
  const double y_lo = std::pow(2.0, -j), y_hi = std::pow(2.0, -(j - 1));
  for (double tau : {0.0, 0.05, 0.13, 0.3}) {
    long double overlap = 0.0L;
    for (int64_t n = 1; n <= 64; ++n) {
      const double y = alpha / double(n);
      if (y >= y_lo && y < y_hi) overlap += (long double)std::max(0.0, y - tau);
    }
    const double got = covering_covariance_oracle(lam, b, j, 0.4, 0.4 + tau);
    CHECK(std::abs(std::log(got) - double(overlap)) < 1e-12);
    const double got_pmc =
        covering_covariance_oracle(lam, b, j, 0.4, 0.4 + tau, 0.3);
    CHECK(std::abs(std::log(got_pmc) - 0.49 * double(overlap)) < 1e-12);
  }

  // constant density: integral of (y - tau) c over the band has a closed form
  const double c = 2.0;
  const LambdaMeasure dens = LambdaMeasure::from_density([c](double) { return c; });
  const double tau = 0.1;
  const double lo = std::max(y_lo, tau);
  const double want = c * (0.5 * (y_hi * y_hi - lo * lo) - tau * (y_hi - lo));
  const double got = covering_covariance_oracle(dens, b, j, 0.2, 0.2 + tau);
  CHECK(std::abs(std::log(got) - want) < 1e-10);
}

TEST_CASE("covariance oracle matches monte carlo") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.5);
  const int b = 2, j = 2;
  const double t = 0.41, s = 0.55;
  const int S = 20000;
  double acc = 0.0, acc2 = 0.0, acc_p = 0.0, acc_p2 = 0.0;
  for (int k = 0; k < S; ++k) {
    const PppBandSample band = sample_ppp_band(lam, b, j, 808, uint64_t(k));
    const double v = mrc_layer_at(band, t) * mrc_layer_at(band, s);
    acc += v;
    acc2 += v * v;
    const double vp = pmc_layer_at(band, 0.3, t) * pmc_layer_at(band, 0.3, s);
    acc_p += vp;
    acc_p2 += vp * vp;
  }
  const double mean = acc / S;
  const double want = covering_covariance_oracle(lam, b, j, t, s);
  const double se = std::sqrt(std::max(acc2 / S - mean * mean, 0.0) / S);
  CHECK(std::abs(mean - want) < 3.0 * se);

  const double mean_p = acc_p / S;
  const double want_p = covering_covariance_oracle(lam, b, j, t, s, 0.3);
  const double se_p = std::sqrt(std::max(acc_p2 / S - mean_p * mean_p, 0.0) / S);
  CHECK(std::abs(mean_p - want_p) < 3.0 * se_p);
}

TEST_CASE("mrc samples: determinism, monotone coverage, uncovered fraction") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.5);
  const MrcSample a = sample_mrc(lam, 2, 4, 8, 62, 7);
  const MrcSample b = sample_mrc(lam, 2, 4, 8, 62, 7);
  for (size_t i = 0; i < a.field.values.size(); ++i) {
    CHECK(a.field.values[i] == b.field.values[i]);
    CHECK((a.field.values[i] > 0.0) == bool(a.uncovered[i]));
  }

  // the first m bands do not depend on how many more follow
  const MrcSample deeper = sample_mrc(lam, 2, 6, 8, 62, 7);
  for (size_t i = 0; i < a.uncovered.size(); ++i)
    CHECK(deeper.uncovered[i] <= a.uncovered[i]);

  // expected uncovered fraction is exp(-sum of band y-masses)
  double y_sum = 0.0;
  for (int j = 1; j <= 4; ++j) y_sum += band_masses(lam, 2, j).y_mass;
  const int S = 2000;
  double frac_acc = 0.0, frac_acc2 = 0.0;
  for (int s = 0; s < S; ++s) {
    const MrcSample ms = sample_mrc(lam, 2, 4, 8, 63, uint64_t(s));
    double f = 0.0;
    for (uint8_t u : ms.uncovered) f += double(u);
    f /= double(ms.uncovered.size());
    frac_acc += f;
    frac_acc2 += f * f;
  }
  const double mean = frac_acc / S;
  const double want = std::exp(-y_sum);
  const double se = std::sqrt(std::max(frac_acc2 / S - mean * mean, 0.0) / S);
  CHECK(std::abs(mean - want) < 3.0 * se);
}

TEST_CASE("covering ensembles are mean one") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.5);
  const int S = 256;
  double acc = 0.0;
  for (int s = 0; s < S; ++s)
    acc += total_mass(sample_mrc(lam, 2, 6, 8, 404, uint64_t(s)).field);
  CHECK(std::abs(acc / S - 1.0) < 4.0 / std::sqrt(double(S)));

  acc = 0.0;
  for (int s = 0; s < S; ++s)
    acc += total_mass(sample_pmc(lam, 0.5, 2, 6, 8, 405, uint64_t(s)));
  CHECK(std::abs(acc / S - 1.0) < 4.0 / std::sqrt(double(S)));
}

TEST_CASE("covering argument errors") {
  const LambdaMeasure lam = LambdaMeasure::canonical_alpha(0.5);
  CHECK_THROWS_AS(sample_mrc(lam, 2, 6, 5, 1, 0), ArgumentError);
  CHECK_THROWS_AS(sample_pmc(lam, 1.0, 2, 3, 5, 1, 0), ArgumentError);
  CHECK_THROWS_AS(sample_pmc(lam, 0.0, 2, 3, 5, 1, 0), ArgumentError);
  const PppBandSample band = sample_ppp_band(lam, 2, 1, 1, 0);
  CHECK_THROWS_AS(pmc_layer(band, 1.5, make_grid(1, 2, 3)), ArgumentError);
  CHECK_THROWS_AS(mrc_layer(band, make_grid(2, 2, 3)), ArgumentError);
  CHECK_THROWS_AS(covering_covariance_oracle(lam, 2, 1, -0.5, 0.5), ArgumentError);
}
