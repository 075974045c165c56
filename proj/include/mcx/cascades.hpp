#pragma once

#include <cstdint>
#include <vector>

#include "mcx/badic.hpp"

namespace mcx {

// Weight law for canonical cascades: every generation-k cell draws one iid
// copy of W with W >= 0 and E[W] = 1.
struct WeightSpec {
  enum class Kind { discrete, lognormal };
  Kind kind = Kind::discrete;
  std::vector<double> values;  // discrete support points
  std::vector<double> probs;   // matching probabilities
  double sigma_w = 0.0;        // lognormal: W = exp(sigma_w N - sigma_w^2/2)

  static WeightSpec discrete(std::vector<double> values, std::vector<double> probs);
  static WeightSpec lognormal(double sigma_w);

  void validate() const;       // throws ArgumentError
  bool degenerate() const;     // W == 1 almost surely
  double moment(double p) const;   // E[W^p]
  double wlogw() const;            // E[W log W]
};

// One independent W per cell per generation k = 1..m, multiplied onto the
// density over that cell.  The draw for (k, cell) is keyed by the cell's flat
// index at level k, so refining the grid does not change any weight.
DensityField sample_canonical_cascade(const WeightSpec& w, int d, int b, int m,
                                      int grid_level, uint64_t master_seed,
                                      uint64_t sample_id);

// Generalized cascade with the geometric-Brownian-motion weight process
// W(u) = exp(sigma B(u) - sigma^2 u / 2) on [0,1], d = 1 only.  Each
// generation-k cell rescales the fine grid centers into [0,1) and samples an
// independent Brownian path there by cumulative increments.
DensityField sample_gbm_cascade(double sigma, int b, int m, int grid_level,
                                uint64_t master_seed, uint64_t sample_id);

// Moment conditions for non-degeneracy and Fourier decay: E[W^p] against
// b^{d(p-1)} on a p-grid in (1,2], and E[W log W] against d log b.
struct CascadeMomentRow {
  double p = 0.0;
  double moment = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct CascadeMomentReport {
  std::vector<CascadeMomentRow> rows;
  double wlogw = 0.0;
  double wlogw_threshold = 0.0;
  bool wlogw_pass = false;
  bool degenerate = false;  // W == 1 a.s.: conditions hold but no chaos
  bool pass = false;
};

CascadeMomentReport cascade_moment_report(const WeightSpec& w,
                                          const std::vector<double>& p_grid, int b,
                                          int d);

}  // namespace mcx
