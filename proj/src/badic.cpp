#include "mcx/badic.hpp"

#include <cmath>

#include "mcx/common.hpp"

namespace mcx {

BAdicGrid make_grid(int d, int b, int level, int64_t max_cells) {
  if (d < 1) throw ArgumentError("make_grid: dimension must be >= 1");
  if (b < 2) throw ArgumentError("make_grid: base must be >= 2");
  if (level < 0) throw ArgumentError("make_grid: level must be >= 0");

  // overflow-safe b^(d*level) with budget check
  int64_t cells = 1;
  for (int k = 0; k < d * level; ++k) {
    if (cells > max_cells / b) {
      throw ResourceError("make_grid: b^(d*M) cells exceed the budget of " +
                          std::to_string(max_cells) + " (d=" + std::to_string(d) +
                          ", b=" + std::to_string(b) +
                          ", M=" + std::to_string(level) + ")");
    }
    cells *= b;
  }
  int64_t n_axis = 1;
  for (int k = 0; k < level; ++k) n_axis *= b;

  BAdicGrid g;
  g.d = d;
  g.b = b;
  g.level = level;
  g.n_axis = n_axis;
  g.n_cells = cells;
  return g;
}

static void check_index(const BAdicGrid& g, const std::vector<int64_t>& idx) {
  if (static_cast<int>(idx.size()) != g.d) {
    throw ArgumentError("cell index has wrong dimension");
  }
  for (int64_t h : idx) {
    if (h < 0 || h >= g.n_axis) {
      throw ArgumentError("cell index component out of range [0, b^M)");
    }
  }
}

int64_t flat_index(const BAdicGrid& g, const std::vector<int64_t>& idx) {
  check_index(g, idx);
  int64_t f = 0;
  for (int a = 0; a < g.d; ++a) f = f * g.n_axis + idx[a];
  return f;
}

std::vector<int64_t> multi_index(const BAdicGrid& g, int64_t flat) {
  if (flat < 0 || flat >= g.n_cells) throw ArgumentError("flat index out of range");
  std::vector<int64_t> idx(g.d);
  for (int a = g.d - 1; a >= 0; --a) {
    idx[a] = flat % g.n_axis;
    flat /= g.n_axis;
  }
  return idx;
}

std::vector<double> min_vertex(const BAdicGrid& g, const std::vector<int64_t>& idx) {
  check_index(g, idx);
  std::vector<double> v(g.d);
  for (int a = 0; a < g.d; ++a) {
    v[a] = static_cast<double>(idx[a]) / static_cast<double>(g.n_axis);
  }
  return v;
}

std::vector<double> cell_center(const BAdicGrid& g, const std::vector<int64_t>& idx) {
  std::vector<double> v = min_vertex(g, idx);
  double h = 0.5 * g.cell_width();
  for (double& x : v) x += h;
  return v;
}

DensityField make_unit_field(const BAdicGrid& g) {
  DensityField f;
  f.grid = g;
  f.values.assign(static_cast<size_t>(g.n_cells), 1.0);
  f.m = -1;
  return f;
}

void multiply_layer(DensityField& field, const std::vector<double>& layer_values) {
  if (layer_values.size() != field.values.size()) {
    throw ArgumentError("multiply_layer: layer lives on a different grid");
  }
  const size_t n = field.values.size();
  const double* lv = layer_values.data();
  double* fv = field.values.data();
  for (size_t i = 0; i < n; ++i) {
    if (!(lv[i] >= 0.0)) {
      throw ContractError("multiply_layer: layer has a negative value at cell " +
                          std::to_string(i));
    }
  }
#pragma omp parallel for schedule(static) if (n > 65536)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) fv[i] *= lv[i];
  field.m += 1;
}

void multiply_layer(DensityField& field, const DensityField& layer) {
  if (!field.grid.same_as(layer.grid)) {
    throw ArgumentError("multiply_layer: grid mismatch (d/b/level differ)");
  }
  multiply_layer(field, layer.values);
}

double total_mass(const DensityField& field) {
  long double acc = 0.0L;
  for (double v : field.values) acc += v;
  long double cell = 1.0L;
  for (int a = 0; a < field.grid.d; ++a) cell /= field.grid.n_axis;
  return static_cast<double>(acc * cell);
}

DensityField coarsen(const DensityField& field, int target_level) {
  const BAdicGrid& g = field.grid;
  if (target_level < 0 || target_level > g.level) {
    throw ArgumentError("coarsen: target level out of range");
  }
  BAdicGrid cg = make_grid(g.d, g.b, target_level);
  DensityField out;
  out.grid = cg;
  out.m = field.m;
  int64_t q = g.n_axis / cg.n_axis;  // fine cells per coarse cell per axis
  int64_t count = 1;
  for (int a = 0; a < g.d; ++a) count *= q;
  // long double accumulation plus an exact integer divisor keeps one-level
  // averaging of constant blocks bit-exact (refinement invariance)
  std::vector<long double> acc(static_cast<size_t>(cg.n_cells), 0.0L);
  std::vector<int64_t> idx(g.d);
  for (int64_t f = 0; f < g.n_cells; ++f) {
    int64_t rest = f;
    for (int a = g.d - 1; a >= 0; --a) {
      idx[a] = rest % g.n_axis;
      rest /= g.n_axis;
    }
    int64_t coarse = 0;
    for (int a = 0; a < g.d; ++a) coarse = coarse * cg.n_axis + idx[a] / q;
    acc[static_cast<size_t>(coarse)] += field.values[static_cast<size_t>(f)];
  }
  out.values.resize(static_cast<size_t>(cg.n_cells));
  for (int64_t c = 0; c < cg.n_cells; ++c)
    out.values[static_cast<size_t>(c)] =
        static_cast<double>(acc[static_cast<size_t>(c)] / static_cast<long double>(count));
  return out;
}

}  // namespace mcx
