#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mcx/badic.hpp"

namespace mcx {

// Intensity measure of the covering point process on the y-strip (0,1).
// Supports discrete atoms, an absolutely continuous part, and the canonical
// family with unit atoms at alpha/n for every n >= 1 (handled analytically,
// the atoms are never materialized).
struct LambdaMeasure {
  bool canonical = false;
  double alpha = 0.0;                              // canonical only
  std::vector<std::pair<double, double>> atoms;    // (location y, mass)
  std::function<double(double)> density;           // optional a.c. part on (0,1)

  static LambdaMeasure canonical_alpha(double alpha);
  static LambdaMeasure from_atoms(std::vector<std::pair<double, double>> atoms);
  static LambdaMeasure from_density(std::function<double(double)> density);
};

// Band j is {y : b^-j <= y < b^-(j-1)}, j >= 1.
struct BandMasses {
  double y_mass = 0.0;  // integral of y over the band
  double mass = 0.0;    // total Lambda mass of the band
};

BandMasses band_masses(const LambdaMeasure& lambda, int b, int j);

// limsup_j yMass_j / log b, surrogate: max over the last half of the first
// j_count bands.  chi_min takes the min over several bases.
double chi(const LambdaMeasure& lambda, int b, int j_count = 40);
double chi_min(const LambdaMeasure& lambda, const std::vector<int>& bases,
               int j_count = 40);

// One Poisson draw of the band restricted to the x-window (-1, 1), which is
// every point whose interval (x, x+y) can meet [0,1].
struct PppBandSample {
  int j = 0;
  double y_lo = 0.0;
  double y_hi = 0.0;
  BandMasses masses;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

PppBandSample sample_ppp_band(const LambdaMeasure& lambda, int b, int j,
                              uint64_t master_seed, uint64_t sample_id);

// Covering layer: X(t) = e^{yMass} if no band point covers t (t in (x, x+y)),
// else 0.  Values at cell centers; also marks covered cells.
std::vector<double> mrc_layer(const PppBandSample& band, const BAdicGrid& grid,
                              std::vector<uint8_t>* covered = nullptr);
double mrc_layer_at(const PppBandSample& band, double t);

// Poisson chaos layer: X(t) = a^{#points covering t} e^{(1-a) yMass}.
std::vector<double> pmc_layer(const PppBandSample& band, double a,
                              const BAdicGrid& grid);
double pmc_layer_at(const PppBandSample& band, double a, double t);

struct MrcSample {
  DensityField field;
  std::vector<uint8_t> uncovered;  // 1 where the density is positive
};

// Product of covering layers j = 1..m (layer 0 is the constant 1).
MrcSample sample_mrc(const LambdaMeasure& lambda, int b, int m, int grid_level,
                     uint64_t master_seed, uint64_t sample_id);

DensityField sample_pmc(const LambdaMeasure& lambda, double a, int b, int m,
                        int grid_level, uint64_t master_seed, uint64_t sample_id);

// Closed-form layer moments E[X^p] given the band's yMass.
double mrc_moment_oracle(double y_mass, double p);
double pmc_moment_oracle(double y_mass, double a, double p);

// E[X(t) X(s)] for one layer; the exponent is the Lambda-area of the
// intersection of the two covering triangles, integral of (y - |t-s|)_+ over
// the band.  With `a` set, the Poisson chaos variant.
double covering_covariance_oracle(const LambdaMeasure& lambda, int b, int j, double t,
                                  double s, std::optional<double> a = std::nullopt);

}  // namespace mcx
