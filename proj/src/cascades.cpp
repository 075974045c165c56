#include "mcx/cascades.hpp"

#include <algorithm>
#include <cmath>

#include "mcx/common.hpp"
#include "mcx/rng.hpp"

namespace mcx {

namespace {

int64_t ipow(int64_t base, int exp) {
  int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

double draw_weight(const WeightSpec& w, RngStream& rng) {
  if (w.kind == WeightSpec::Kind::lognormal) {
    return std::exp(w.sigma_w * rng.normal() - 0.5 * w.sigma_w * w.sigma_w);
  }
  const double u = rng.uniform();
  double cum = 0.0;
  for (size_t i = 0; i < w.values.size(); ++i) {
    cum += w.probs[i];
    if (u < cum) return w.values[i];
  }
  return w.values.back();
}

}  // namespace

WeightSpec WeightSpec::discrete(std::vector<double> values, std::vector<double> probs) {
  WeightSpec w;
  w.kind = Kind::discrete;
  w.values = std::move(values);
  w.probs = std::move(probs);
  w.validate();
  return w;
}

WeightSpec WeightSpec::lognormal(double sigma_w) {
  WeightSpec w;
  w.kind = Kind::lognormal;
  w.sigma_w = sigma_w;
  w.validate();
  return w;
}

void WeightSpec::validate() const {
  if (kind == Kind::lognormal) {
    if (!(sigma_w >= 0.0) || !std::isfinite(sigma_w))
      throw ArgumentError("lognormal weight parameter must be finite and >= 0");
    return;
  }
  if (values.empty() || values.size() != probs.size())
    throw ArgumentError("discrete weight law needs matching values and probabilities");
  double psum = 0.0, mean = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) throw ArgumentError("weight values must be >= 0");
    if (!(probs[i] >= 0.0)) throw ArgumentError("weight probabilities must be >= 0");
    psum += probs[i];
    mean += probs[i] * values[i];
  }
  if (std::abs(psum - 1.0) > 1e-12)
    throw ArgumentError("weight probabilities must sum to 1");
  if (std::abs(mean - 1.0) > 1e-12)
    throw ArgumentError("weight law must have mean 1");
}

bool WeightSpec::degenerate() const {
  if (kind == Kind::lognormal) return sigma_w == 0.0;
  for (size_t i = 0; i < values.size(); ++i)
    if (probs[i] > 0.0 && values[i] != 1.0) return false;
  return true;
}

double WeightSpec::moment(double p) const {
  if (kind == Kind::lognormal) return std::exp(0.5 * sigma_w * sigma_w * p * (p - 1.0));
  double m = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (probs[i] == 0.0) continue;
    if (values[i] == 0.0 && p <= 0.0)
      throw ArgumentError("nonpositive moment of a weight with an atom at 0");
    m += probs[i] * std::pow(values[i], p);
  }
  return m;
}

double WeightSpec::wlogw() const {
  if (kind == Kind::lognormal) return 0.5 * sigma_w * sigma_w;
  double m = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (probs[i] == 0.0 || values[i] == 0.0) continue;  // x log x -> 0
    m += probs[i] * values[i] * std::log(values[i]);
  }
  return m;
}

DensityField sample_canonical_cascade(const WeightSpec& w, int d, int b, int m,
                                      int grid_level, uint64_t master_seed,
                                      uint64_t sample_id) {
  w.validate();
  if (m < 0) throw ArgumentError("generation count must be >= 0");
  if (grid_level < m) throw ArgumentError("grid level must be >= the generation count");
  BAdicGrid grid = make_grid(d, b, grid_level);
  DensityField field = make_unit_field(grid);
  field.m = 0;  // generations start at k = 1

  std::vector<double> layer(static_cast<size_t>(grid.n_cells));
  std::vector<int64_t> idx(d);
  for (int k = 1; k <= m; ++k) {
    const int64_t cells_axis = ipow(b, k);
    const int64_t q = grid.n_axis / cells_axis;
    int64_t n_coarse = 1;
    for (int a = 0; a < d; ++a) n_coarse *= cells_axis;

    std::vector<double> weights(static_cast<size_t>(n_coarse));
    for (int64_t c = 0; c < n_coarse; ++c) {
      RngStream rng(master_seed, sample_id, static_cast<uint64_t>(k),
                    static_cast<uint64_t>(c));
      weights[static_cast<size_t>(c)] = draw_weight(w, rng);
    }

    for (int64_t f = 0; f < grid.n_cells; ++f) {
      int64_t rest = f;
      for (int a = d - 1; a >= 0; --a) {
        idx[a] = rest % grid.n_axis;
        rest /= grid.n_axis;
      }
      int64_t coarse = 0;
      for (int a = 0; a < d; ++a) coarse = coarse * cells_axis + idx[a] / q;
      layer[static_cast<size_t>(f)] = weights[static_cast<size_t>(coarse)];
    }
    multiply_layer(field, layer);
  }
  return field;
}

DensityField sample_gbm_cascade(double sigma, int b, int m, int grid_level,
                                uint64_t master_seed, uint64_t sample_id) {
  if (!(sigma > 0.0) || !(sigma * sigma < 2.0 * std::log(static_cast<double>(b))))
    throw ArgumentError("gbm parameter must satisfy 0 < sigma^2 < 2 log b");
  if (m < 0) throw ArgumentError("generation count must be >= 0");
  if (grid_level < m) throw ArgumentError("grid level must be >= the generation count");
  BAdicGrid grid = make_grid(1, b, grid_level);
  DensityField field = make_unit_field(grid);
  field.m = 0;

  const double h = grid.cell_width();
  std::vector<double> layer(static_cast<size_t>(grid.n_cells));
  for (int k = 1; k <= m; ++k) {
    const int64_t cells = ipow(b, k);
    const int64_t q = grid.n_axis / cells;  // fine cells per generation-k cell
    const double scale = std::pow(static_cast<double>(b), k);
    for (int64_t c = 0; c < cells; ++c) {
      RngStream rng(master_seed, sample_id, static_cast<uint64_t>(k),
                    static_cast<uint64_t>(c));
      const double left = static_cast<double>(c) / static_cast<double>(cells);
      double bt = 0.0;   // Brownian value at the previous rescaled time
      double prev = 0.0;
      for (int64_t i = 0; i < q; ++i) {
        const double t = (static_cast<double>(c * q + i) + 0.5) * h;
        const double u = scale * (t - left);  // rescaled time in (0,1)
        bt += std::sqrt(u - prev) * rng.normal();
        prev = u;
        layer[static_cast<size_t>(c * q + i)] =
            std::exp(sigma * bt - 0.5 * sigma * sigma * u);
      }
    }
    multiply_layer(field, layer);
  }
  return field;
}

CascadeMomentReport cascade_moment_report(const WeightSpec& w,
                                          const std::vector<double>& p_grid, int b,
                                          int d) {
  w.validate();
  if (b < 2) throw ArgumentError("base must be >= 2");
  if (d < 1) throw ArgumentError("dimension must be >= 1");
  CascadeMomentReport rep;
  const double dlogb = static_cast<double>(d) * std::log(static_cast<double>(b));
  for (double p : p_grid) {
    if (!(p > 1.0) || !(p <= 2.0))
      throw ArgumentError("moment grid must lie in (1, 2]");
    CascadeMomentRow row;
    row.p = p;
    row.moment = w.moment(p);
    row.threshold = std::pow(static_cast<double>(b), static_cast<double>(d) * (p - 1.0));
    row.pass = row.moment < row.threshold;
    rep.rows.push_back(row);
  }
  rep.wlogw = w.wlogw();
  rep.wlogw_threshold = dlogb;
  rep.wlogw_pass = rep.wlogw < dlogb;
  rep.degenerate = w.degenerate();
  rep.pass = rep.wlogw_pass;
  for (const auto& row : rep.rows) rep.pass = rep.pass && row.pass;
  return rep;
}

}  // namespace mcx
