#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcx {

// Uniform b-adic grid on [0,1)^d at refinement level M: b^M cells per axis,
// b^(dM) cells total, indexed row-major (first axis slowest).
struct BAdicGrid {
  int d = 1;
  int b = 2;
  int level = 0;
  int64_t n_axis = 1;   // b^level
  int64_t n_cells = 1;  // b^(d*level)

  double cell_width() const { return 1.0 / static_cast<double>(n_axis); }
  bool same_as(const BAdicGrid& o) const {
    return d == o.d && b == o.b && level == o.level;
  }
};

// Default cell budget: 2^26 cells (512 MiB of doubles) is comfortably above
// every desk-scale configuration and still rejects runaway levels.
inline constexpr int64_t kDefaultMaxCells = int64_t(1) << 26;

BAdicGrid make_grid(int d, int b, int level, int64_t max_cells = kDefaultMaxCells);

// flat <-> multi-index, row-major
int64_t flat_index(const BAdicGrid& g, const std::vector<int64_t>& idx);
std::vector<int64_t> multi_index(const BAdicGrid& g, int64_t flat);

// Minimal vertex of a cell, component h -> h / b^M (0-based indices).
std::vector<double> min_vertex(const BAdicGrid& g, const std::vector<int64_t>& idx);
std::vector<double> cell_center(const BAdicGrid& g, const std::vector<int64_t>& idx);

// Nonnegative density against Lebesgue on the grid, tracking how many
// multiplicative layers have been folded in.  m = -1 means plain Lebesgue
// (no layers yet); each multiply_layer bumps it.
struct DensityField {
  BAdicGrid grid;
  std::vector<double> values;
  int m = -1;
};

DensityField make_unit_field(const BAdicGrid& g);

// Pointwise product with one nonnegative layer on the identical grid.
void multiply_layer(DensityField& field, const std::vector<double>& layer_values);
void multiply_layer(DensityField& field, const DensityField& layer);

// b^(-dM) * sum(values)
double total_mass(const DensityField& field);

// Coarse-grain by cell averaging down to a lower level.
DensityField coarsen(const DensityField& field, int target_level);

// --- serialization (flat 64-bit floats, row-major, behind a JSON header) ---

struct FieldSeedPath {
  uint64_t master_seed = 0;
  uint64_t sample_id = 0;
};

void write_field(const std::string& path, const DensityField& field,
                 const FieldSeedPath& seed);
DensityField read_field(const std::string& path, FieldSeedPath* seed = nullptr);

// Occupancy masks (covering supports) use the same header with a bitset body.
void write_mask(const std::string& path, const BAdicGrid& grid,
                const std::vector<uint8_t>& mask, const FieldSeedPath& seed);
std::vector<uint8_t> read_mask(const std::string& path, BAdicGrid* grid_out = nullptr,
                               FieldSeedPath* seed = nullptr);

}  // namespace mcx
