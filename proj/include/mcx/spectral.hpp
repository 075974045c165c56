#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mcx/badic.hpp"

namespace mcx {

// Fourier coefficients of the measure with the field's density against
// Lebesgue, on the lattice {-n_max..n_max}^d, coef(0) = total mass.
struct FourierSpectrum {
  int d = 1;
  int64_t n_max = 0;
  int64_t n_side = 1;  // 2 n_max + 1 per axis
  std::vector<std::complex<double>> coef;

  // n components in [-n_max, n_max]
  const std::complex<double>& at(const std::vector<int64_t>& n) const;
  double total_mass() const;
};

// Exact coefficients of the piecewise-constant density: a full-grid FFT of
// the cell values times the closed-form per-cell integral of the character.
// Requires n_max <= b^M / 2 (grid Nyquist).
FourierSpectrum fourier_coefficients(const DensityField& field, int64_t n_max);

struct BandStat {
  int band = 0;  // L: points with b^(L-1) < |n| <= b^L (Euclidean)
  int64_t count = 0;
  double max_sq = 0.0;
  double mean_sq = 0.0;
  double mean_log_sq = 0.0;    // mean of log |coef|^2 over the band
  double mean_log_freq = 0.0;  // centroid of log |n|
  double log_freq_at_max = 0.0;
};

// Complete bands only: L = 1 .. floor(log_b n_max).
std::vector<BandStat> band_statistics(const FourierSpectrum& spectrum, int b);

struct DimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  int band_lo = 0;
  int band_hi = 0;
  std::string method;
  bool degenerate = false;
};

struct FitOptions {
  int drop_low = 1;   // lowest bands discarded (pre-asymptotic)
  int drop_high = 1;  // highest bands discarded (Nyquist contamination)
};

enum class FourierDimMode { ensemble_mean, pathwise_max };

// Slope of the |coef|^2 power-law decay across bands; positive slope = decay
// exponent.  The ensemble-mean mode averages |coef|^2 across samples first
// and regresses band log-means on band log-frequency centroids; the
// pathwise-max mode fits each sample's band maxima and averages the slopes.
// Both recover a pure power law exactly.  Add samples in a fixed order; the
// accumulation is sequential by design so results are reproducible.
class FourierDimAccumulator {
 public:
  FourierDimAccumulator(int d, int64_t n_max, int b, FitOptions fit = {});

  void add(const FourierSpectrum& spectrum);
  int64_t count() const { return count_; }

  DimensionEstimate estimate(FourierDimMode mode) const;

  // band table of the ensemble-averaged power, for CSV output
  std::vector<BandStat> mean_band_statistics() const;

 private:
  int d_ = 1;
  int64_t n_max_ = 0;
  int b_ = 2;
  FitOptions fit_;
  int64_t count_ = 0;
  std::vector<double> power_sum_;       // sum over samples of |coef|^2
  std::vector<double> pathwise_slopes_; // one fitted slope per sample
};

DimensionEstimate estimate_fourier_dim(const std::vector<FourierSpectrum>& ensemble,
                                       int b, FourierDimMode mode, FitOptions fit = {});

// (sum_{0<|n|<=n_max} (|n|^{tau/2} |coef(n)|)^q)^{1/q}, Euclidean ball.
double weighted_lq_norm(const FourierSpectrum& spectrum, double tau, double q);

// Both sides of the full-lattice Parseval identity: the lattice sum collapses
// per frequency residue (the aliased tails sum to the squared cell width
// exactly), so it equals the grid L2 norm of the density.
struct EnergyIdentity {
  double lattice_sum = 0.0;
  double grid_l2 = 0.0;
};

EnergyIdentity spectral_energy_identity(const DensityField& field);

// E[ ||(|n|^{tau/2} coef(n))_n||_{l^q}^p ] across martingale levels, with a
// bounded-versus-growth verdict from first-third / last-third means.
struct MartingaleDiagnostic {
  std::vector<int> m_values;
  std::vector<double> mean_norm_p;
  std::vector<double> std_error;
  double first_third = 0.0;
  double last_third = 0.0;
  bool bounded = false;
  std::string verdict;
};

MartingaleDiagnostic martingale_diagnostic(
    const std::function<DensityField(int m, uint64_t sample_id)>& sampler, double tau,
    double p, double q, double p0, double alpha0, int d,
    const std::vector<int>& m_range, int64_t samples, int64_t n_max);

// S2(delta) = sum over disjoint b-adic cells of mass^2 at delta = b^-k.
std::vector<double> correlation_sums(const DensityField& field,
                                     const std::vector<int>& levels);
DimensionEstimate correlation_dim(const DensityField& field,
                                  const std::vector<int>& levels);

// Occupied-cell counts of a mask at b-adic coarsenings (a coarse cell is
// occupied when any fine cell inside it is).
std::vector<int64_t> box_counts(const std::vector<uint8_t>& mask, const BAdicGrid& grid,
                                const std::vector<int>& levels);

// Box-counting slope of an occupancy mask over b-adic coarsenings.
DimensionEstimate box_dim_mask(const std::vector<uint8_t>& mask, const BAdicGrid& grid,
                               const std::vector<int>& levels);

// Least-squares line fit, shared by the dimension estimators.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;  // standard error of the slope
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mcx
