#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "mcx/badic.hpp"
#include "mcx/common.hpp"
#include "mcx/gaussian.hpp"
#include "mcx/kernels.hpp"
#include "mcx/rng.hpp"

using namespace mcx;

namespace {

const RadialProfile& shared_phi() {
  static const RadialProfile phi = bump_selfconvolve(BumpSpec{}, 1);
  return phi;
}

struct MomentTable {
  std::vector<double> mean, var;
  std::vector<std::vector<double>> cov;  // cov[k] against lag k cells
};

}  // namespace

TEST_CASE("layer sampler reproduces the layer covariance on the torus") {
  const BAdicGrid grid = make_grid(1, 2, 6);  // 64 cells
  const KernelDecomposition dec = make_exact_log_decomposition(2);
  const LayerKernel k2 = dec.layer(2);
  const LayerSampler sampler(k2, grid);
  CHECK_FALSE(sampler.per_cell());
  CHECK(sampler.var0() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(sampler.min_eigenvalue() >= -1e-6);

  const int n_samp = 4000;
  const int64_t n = grid.n_cells;
  std::vector<std::vector<double>> fields(n_samp);
  for (int s = 0; s < n_samp; ++s) {
    RngStream rng(2025, uint64_t(s), 2, 0);
    sampler.sample(rng, fields[size_t(s)]);
    REQUIRE(int64_t(fields[size_t(s)].size()) == n);
  }

  const auto moments = [&](int64_t i, int64_t j) {
    double mi = 0.0, mj = 0.0;
    for (int s = 0; s < n_samp; ++s) {
      mi += fields[size_t(s)][size_t(i)];
      mj += fields[size_t(s)][size_t(j)];
    }
    mi /= n_samp;
    mj /= n_samp;
    double c = 0.0;
    for (int s = 0; s < n_samp; ++s)
      c += (fields[size_t(s)][size_t(i)] - mi) * (fields[size_t(s)][size_t(j)] - mj);
    return c / (n_samp - 1);
  };

  // 3 sigma for a Gaussian covariance estimate
  const double k0 = k2.k0;
  const auto band = [&](double kr) {
    return 3.0 * std::sqrt((k0 * k0 + kr * kr) / double(n_samp));
  };

  CHECK(std::abs(moments(7, 7) - k0) < 3.0 * k0 * std::sqrt(2.0 / n_samp));
  for (int64_t lag : {4, 12, 32}) {
    const double r = double(lag) * grid.cell_width();
    const double want = exact_log_layer(2, 2, r);
    CHECK(std::abs(moments(3, 3 + lag) - want) < band(want));
  }
  // periodization: cells 2 and 62 sit 4 cells apart through the wrap
  const double wrap = exact_log_layer(2, 2, 4.0 * grid.cell_width());
  CHECK(std::abs(moments(2, 62) - wrap) < band(wrap));
}

TEST_CASE("layers finer than the grid fall back to independent cells") {
  const BAdicGrid grid = make_grid(1, 2, 4);
  const KernelDecomposition dec = make_exact_log_decomposition(2);
  const LayerSampler sampler(dec.layer(7), grid);
  CHECK(sampler.per_cell());

  const int n_samp = 6000;
  double v_acc = 0.0, c_acc = 0.0;
  double m0 = 0.0, m1 = 0.0;
  std::vector<std::vector<double>> fields(n_samp);
  for (int s = 0; s < n_samp; ++s) {
    RngStream rng(2025, uint64_t(s), 7, 0);
    sampler.sample(rng, fields[size_t(s)]);
    m0 += fields[size_t(s)][0];
    m1 += fields[size_t(s)][1];
  }
  m0 /= n_samp;
  m1 /= n_samp;
  for (int s = 0; s < n_samp; ++s) {
    v_acc += (fields[size_t(s)][0] - m0) * (fields[size_t(s)][0] - m0);
    c_acc += (fields[size_t(s)][0] - m0) * (fields[size_t(s)][1] - m1);
  }
  const double var = v_acc / (n_samp - 1);
  const double cov = c_acc / (n_samp - 1);
  const double k0 = std::log(2.0);
  CHECK(std::abs(var - k0) < 3.0 * k0 * std::sqrt(2.0 / n_samp));
  CHECK(std::abs(cov) < 3.0 * k0 / std::sqrt(double(n_samp)));
}

TEST_CASE("non positive definite kernels are rejected") {
  LayerKernel bad;
  bad.j = 1;
  bad.k0 = 1.0;
  bad.support = 0.5;
  // pure negative first harmonic on the torus
  bad.eval = [](double r) { return 1.0 - 2.0 * std::cos(2.0 * M_PI * r); };
  CHECK_THROWS_AS(LayerSampler(bad, make_grid(1, 2, 5)), NumericError);
}

TEST_CASE("exponentiated layers are mean one") {
  const BAdicGrid grid = make_grid(1, 2, 5);
  const KernelDecomposition dec = make_exact_log_decomposition(2);
  const LayerKernel k1 = dec.layer(1);
  const LayerSampler sampler(k1, grid);
  const double gamma = 0.8;

  const int n_samp = 20000;
  double acc = 0.0;
  std::vector<double> psi;
  for (int s = 0; s < n_samp; ++s) {
    RngStream rng(77, uint64_t(s), 1, 0);
    sampler.sample(rng, psi);
    acc += exponentiate_layer(psi, gamma, k1.k0)[5];
  }
  const double mean = acc / n_samp;
  const double var = std::exp(gamma * gamma * k1.k0) - 1.0;
  CHECK(std::abs(mean - 1.0) < 3.0 * std::sqrt(var / n_samp));

  CHECK_THROWS_AS(exponentiate_layer(psi, gamma, std::vector<double>(3, 1.0)),
                  ArgumentError);
}

TEST_CASE("distant same-parity cells are uncorrelated") {
  const BAdicGrid grid = make_grid(1, 2, 6);
  const KernelDecomposition dec = make_exact_log_decomposition(2);
  const int j = 3;
  const LayerSampler sampler(dec.layer(j), grid);

  const int n_samp = 3000;
  std::vector<std::vector<double>> psi(n_samp);
  for (int s = 0; s < n_samp; ++s) {
    RngStream rng(31, uint64_t(s), uint64_t(j), 0);
    sampler.sample(rng, psi[size_t(s)]);
  }
  const ParityCheckReport rep =
      parity_independence_check(psi, grid, j, dec.layer(j).k0);
  CHECK(rep.n_pairs > 0);
  CHECK(rep.pass);
  CHECK(std::abs(rep.same_cell_var - rep.expected_var) <
        3.0 * rep.expected_var * std::sqrt(2.0 / n_samp));
}

TEST_CASE("gmc sampler is deterministic and mean one") {
  GmcOptions opt;
  opt.gamma = 0.5;
  opt.d = 1;
  opt.b = 2;
  opt.m = 6;
  opt.grid_level = 8;
  opt.decomposition = make_exact_log_decomposition(2);
  const GmcSampler sampler(opt);
  CHECK(sampler.fallback_start() < 0);

  const DensityField f1 = sampler.sample(999, 4);
  const DensityField f2 = sampler.sample(999, 4);
  REQUIRE(f1.values.size() == f2.values.size());
  for (size_t i = 0; i < f1.values.size(); ++i) CHECK(f1.values[i] == f2.values[i]);
  CHECK(f1.m == 6);
  const DensityField f3 = sampler.sample(999, 5);
  bool all_same = true;
  for (size_t i = 0; i < f1.values.size(); ++i)
    if (f1.values[i] != f3.values[i]) all_same = false;
  CHECK_FALSE(all_same);

  const int S = 256;
  double acc = 0.0;
  for (int s = 0; s < S; ++s) acc += total_mass(sampler.sample(999, uint64_t(s)));
  CHECK(std::abs(acc / S - 1.0) < 4.0 / std::sqrt(double(S)));
}

TEST_CASE("per-cell fallback starts past the grid level") {
  GmcOptions opt;
  opt.gamma = 0.5;
  opt.d = 1;
  opt.b = 2;
  opt.m = 6;
  opt.grid_level = 4;
  opt.decomposition = make_exact_log_decomposition(2);
  const GmcSampler sampler(opt);
  CHECK(sampler.fallback_start() == 5);

  const int S = 256;
  double acc = 0.0;
  for (int s = 0; s < S; ++s) acc += total_mass(sampler.sample(17, uint64_t(s)));
  CHECK(std::abs(acc / S - 1.0) < 4.0 / std::sqrt(double(S)));
}

TEST_CASE("star-scale gmc in dimension 2") {
  const RadialProfile phi2 = bump_selfconvolve(BumpSpec{}, 2);
  GmcOptions opt;
  opt.gamma = 0.8;
  opt.d = 2;
  opt.b = 2;
  opt.m = 2;
  opt.grid_level = 3;
  opt.decomposition = make_star_scale_decomposition(phi2, 2);
  const GmcSampler sampler(opt);

  const DensityField f1 = sampler.sample(55, 0);
  const DensityField f2 = sampler.sample(55, 0);
  for (size_t i = 0; i < f1.values.size(); ++i) CHECK(f1.values[i] == f2.values[i]);

  const int S = 128;
  double acc = 0.0;
  for (int s = 0; s < S; ++s) acc += total_mass(sampler.sample(55, uint64_t(s)));
  CHECK(std::abs(acc / S - 1.0) < 4.0 / std::sqrt(double(S)));
}

TEST_CASE("layer-0 remainder augmentation") {
  GmcOptions opt;
  opt.gamma = 0.5;
  opt.d = 1;
  opt.b = 2;
  opt.m = 4;
  opt.grid_level = 5;
  opt.decomposition = make_star_scale_decomposition(shared_phi(), 2);
  opt.remainder = [](double t, double s) {
    return 0.05 * std::exp(-std::abs(t - s));
  };
  const GmcSampler sampler(opt);
  CHECK(sampler.augmented());

  const DensityField f1 = sampler.sample(7, 1);
  const DensityField f2 = sampler.sample(7, 1);
  for (size_t i = 0; i < f1.values.size(); ++i) CHECK(f1.values[i] == f2.values[i]);

  const int S = 256;
  double acc = 0.0;
  for (int s = 0; s < S; ++s) acc += total_mass(sampler.sample(7, uint64_t(s)));
  CHECK(std::abs(acc / S - 1.0) < 4.0 / std::sqrt(double(S)));

  GmcOptions bad = opt;
  bad.d = 2;
  CHECK_THROWS_AS(GmcSampler{bad}, ArgumentError);
}
