#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mcx/badic.hpp"
#include "mcx/kernels.hpp"
#include "mcx/rng.hpp"

namespace mcx {

// Stationary Gaussian layer on the grid via circulant embedding of the layer
// kernel on the torus.  Layer 0 (support radius up to 1) embeds on a
// doubled-circumference torus and restricts back, which reproduces the exact
// line covariance on [0,1)^d.  Layers finer than the grid (j > M) fall back
// to independent N(0, K_j(0)) per cell; the skipped sub-cell correlation is a
// documented bias of the discretization.
class LayerSampler {
 public:
  LayerSampler(const LayerKernel& kernel, const BAdicGrid& grid);

  // fills out (size n_cells) with one sample of the centered field
  void sample(RngStream& rng, std::vector<double>& out) const;

  double var0() const { return k0_; }
  bool per_cell() const { return per_cell_; }
  double min_eigenvalue() const { return min_eig_; }

 private:
  int d_ = 1;
  int64_t n_ = 1;        // grid cells per axis
  int64_t ne_ = 1;       // embedding cells per axis (doubled for layer 0)
  double k0_ = 0.0;
  bool per_cell_ = false;
  double min_eig_ = 0.0;
  std::vector<double> sqrt_eig_;
};

// P(t) = exp(gamma psi(t) - gamma^2 var/2); var may be per-cell.
std::vector<double> exponentiate_layer(const std::vector<double>& psi, double gamma,
                                       double var0);
std::vector<double> exponentiate_layer(const std::vector<double>& psi, double gamma,
                                       const std::vector<double>& var);

struct GmcOptions {
  double gamma = 0.5;
  int d = 1;
  int b = 2;
  int m = 8;            // last layer index
  int grid_level = 10;  // M >= m recommended (default elsewhere: m + 2)
  KernelDecomposition decomposition;
  // optional layer-0 augmentation by an independent field with two-argument
  // covariance R(t,s) (d = 1 only); pass after it cleared a PSD check
  std::function<double(double, double)> remainder;
};

class GmcSampler {
 public:
  explicit GmcSampler(const GmcOptions& opt);

  const BAdicGrid& grid() const { return grid_; }
  DensityField sample(uint64_t master_seed, uint64_t sample_id) const;

  // centered layer field psi_j, exposed for covariance tests
  std::vector<double> sample_layer(int j, uint64_t master_seed,
                                   uint64_t sample_id) const;

  int fallback_start() const { return fallback_start_; }
  bool augmented() const { return augmented_; }

 private:
  GmcOptions opt_;
  BAdicGrid grid_;
  std::vector<LayerSampler> layers_;
  bool augmented_ = false;
  int fallback_start_ = -1;                // first layer using per-cell fallback
  std::vector<double> z_factor_;           // n x n row-major, Z = factor * xi
  std::vector<double> r_diag_;             // R(t,t) on the grid
};

// Cross-covariance of a layer between distinct same-parity level-j cells at
// torus distance >= b^-j, against 3-sigma Monte Carlo bands around zero.
// Same-cell variance is reported (expected ~ K_j(0)), not tested.
struct ParityCheckReport {
  int n_pairs = 0;
  int n_outside = 0;
  double max_abs_z = 0.0;
  bool pass = false;
  double same_cell_var = 0.0;
  double expected_var = 0.0;
};

ParityCheckReport parity_independence_check(const std::vector<std::vector<double>>& psi,
                                            const BAdicGrid& grid, int j, double k0,
                                            int max_pairs = 64);

}  // namespace mcx
