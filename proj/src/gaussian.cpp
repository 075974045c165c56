#include "mcx/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

#include "mcx/common.hpp"
#include "mcx/fft.hpp"

namespace mcx {

namespace {

int64_t ipow(int64_t base, int exp) {
  int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

LayerSampler::LayerSampler(const LayerKernel& kernel, const BAdicGrid& grid) {
  d_ = grid.d;
  n_ = grid.n_axis;
  k0_ = kernel.k0;
  if (!kernel.eval) throw ArgumentError("layer kernel has no evaluator");
  if (kernel.j > grid.level) {
    // support fits inside one cell; distinct cell centers are uncorrelated
    per_cell_ = true;
    return;
  }

  // The torus only resolves min-image distances up to half its circumference,
  // so a support radius past 1/2 (layer 0) needs the doubled embedding.  The
  // restriction to [0,1)^d is then exact: for |t-s| <= 1 the wrap image is
  // >= 1 >= support and contributes nothing.
  ne_ = (kernel.support > 0.5) ? 2 * n_ : n_;
  int64_t total = 1;
  for (int a = 0; a < d_; ++a) {
    if (total > (int64_t(1) << 28) / ne_)
      throw ResourceError("circulant embedding exceeds the cell budget");
    total *= ne_;
  }

  const double h = grid.cell_width();
  std::vector<std::complex<double>> c(total);
  std::vector<int64_t> idx(d_);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    for (int a = d_ - 1; a >= 0; --a) {
      idx[a] = rem % ne_;
      rem /= ne_;
    }
    double r2 = 0.0;
    for (int a = 0; a < d_; ++a) {
      const double g = static_cast<double>(std::min(idx[a], ne_ - idx[a]));
      r2 += g * g;
    }
    c[flat] = kernel.eval(h * std::sqrt(r2));
  }

  std::vector<int64_t> dims(d_, ne_);
  std::vector<std::complex<double>> lambda(total);
  fft::dft(dims, c.data(), lambda.data(), -1);

  double max_eig = 0.0;
  min_eig_ = 0.0;
  for (const auto& v : lambda) {
    max_eig = std::max(max_eig, v.real());
    min_eig_ = std::min(min_eig_, v.real());
  }
  if (min_eig_ < -1e-8 * std::max(max_eig, 1.0))
    throw NumericError("layer kernel is not positive definite on the sampling torus",
                       min_eig_);
  sqrt_eig_.resize(total);
  for (int64_t k = 0; k < total; ++k)
    sqrt_eig_[k] = std::sqrt(std::max(lambda[k].real(), 0.0));
}

void LayerSampler::sample(RngStream& rng, std::vector<double>& out) const {
  int64_t n_total = 1;
  for (int a = 0; a < d_; ++a) n_total *= n_;
  out.resize(n_total);

  if (per_cell_) {
    const double s = std::sqrt(k0_);
    for (auto& v : out) v = s * rng.normal();
    return;
  }

  int64_t e_total = 1;
  for (int a = 0; a < d_; ++a) e_total *= ne_;
  std::vector<std::complex<double>> w(e_total), fw(e_total);
  for (auto& v : w) v = rng.normal();

  std::vector<int64_t> dims(d_, ne_);
  fft::dft(dims, w.data(), fw.data(), -1);
  for (int64_t k = 0; k < e_total; ++k) fw[k] *= sqrt_eig_[k];
  fft::dft(dims, fw.data(), w.data(), +1);

  const double scale = 1.0 / static_cast<double>(e_total);
  if (ne_ == n_) {
    for (int64_t i = 0; i < n_total; ++i) out[i] = w[i].real() * scale;
    return;
  }
  // restrict the doubled torus back to the [0,1)^d block
  std::vector<int64_t> idx(d_);
  for (int64_t flat = 0; flat < n_total; ++flat) {
    int64_t rem = flat;
    for (int a = d_ - 1; a >= 0; --a) {
      idx[a] = rem % n_;
      rem /= n_;
    }
    int64_t src = 0;
    for (int a = 0; a < d_; ++a) src = src * ne_ + idx[a];
    out[flat] = w[src].real() * scale;
  }
}

std::vector<double> exponentiate_layer(const std::vector<double>& psi, double gamma,
                                       double var0) {
  std::vector<double> out(psi.size());
  const double shift = 0.5 * gamma * gamma * var0;
  for (size_t i = 0; i < psi.size(); ++i) out[i] = std::exp(gamma * psi[i] - shift);
  return out;
}

std::vector<double> exponentiate_layer(const std::vector<double>& psi, double gamma,
                                       const std::vector<double>& var) {
  if (var.size() != psi.size())
    throw ArgumentError("variance vector does not match the field size");
  std::vector<double> out(psi.size());
  for (size_t i = 0; i < psi.size(); ++i)
    out[i] = std::exp(gamma * psi[i] - 0.5 * gamma * gamma * var[i]);
  return out;
}

GmcSampler::GmcSampler(const GmcOptions& opt) : opt_(opt) {
  if (!(opt.gamma > 0.0)) throw ArgumentError("gamma must be positive");
  if (opt.m < 0) throw ArgumentError("last layer index m must be >= 0");
  if (!opt_.decomposition.layer)
    throw ArgumentError("kernel decomposition has no layer factory");
  if (opt_.decomposition.b != opt.b)
    throw ArgumentError("kernel decomposition base does not match the grid base");
  if (opt_.remainder && opt.d != 1)
    throw ArgumentError("layer-0 augmentation is only available in dimension 1");
  grid_ = make_grid(opt.d, opt.b, opt.grid_level);

  layers_.reserve(static_cast<size_t>(opt.m) + 1);
  for (int j = 0; j <= opt.m; ++j) {
    layers_.emplace_back(opt_.decomposition.layer(j), grid_);
    if (layers_.back().per_cell() && fallback_start_ < 0) fallback_start_ = j;
  }

  if (opt_.remainder) {
    const int64_t n = grid_.n_cells;
    if (n > 4096)
      throw ResourceError(
          "layer-0 augmentation needs a dense factorization; lower the grid level");
    Eigen::MatrixXd R(n, n);
    r_diag_.resize(n);
    for (int64_t i = 0; i < n; ++i) {
      const double ti = (static_cast<double>(i) + 0.5) * grid_.cell_width();
      for (int64_t k = 0; k <= i; ++k) {
        const double tk = (static_cast<double>(k) + 0.5) * grid_.cell_width();
        const double v = opt_.remainder(ti, tk);
        R(i, k) = v;
        R(k, i) = v;
      }
      r_diag_[i] = R(i, i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    if (es.info() != Eigen::Success)
      throw NumericError("eigendecomposition of the remainder covariance failed", 0.0);
    const double max_eig = es.eigenvalues().maxCoeff();
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-8 * std::max(max_eig, 1.0))
      throw NumericError("remainder covariance is not positive semidefinite", min_eig);
    Eigen::MatrixXd factor =
        es.eigenvectors() *
        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    z_factor_.assign(factor.data(), factor.data() + n * n);  // column-major
    augmented_ = true;
  }
}

std::vector<double> GmcSampler::sample_layer(int j, uint64_t master_seed,
                                             uint64_t sample_id) const {
  if (j < 0 || j > opt_.m) throw ArgumentError("layer index out of range");
  RngStream rng(master_seed, sample_id, static_cast<uint64_t>(j), 0);
  std::vector<double> psi;
  layers_[static_cast<size_t>(j)].sample(rng, psi);
  return psi;
}

DensityField GmcSampler::sample(uint64_t master_seed, uint64_t sample_id) const {
  DensityField field = make_unit_field(grid_);
  std::vector<double> psi;
  for (int j = 0; j <= opt_.m; ++j) {
    RngStream rng(master_seed, sample_id, static_cast<uint64_t>(j), 0);
    layers_[static_cast<size_t>(j)].sample(rng, psi);
    if (j == 0 && augmented_) {
      const int64_t n = grid_.n_cells;
      RngStream zrng(master_seed, sample_id, 0, 1);
      std::vector<double> xi(n);
      for (auto& v : xi) v = zrng.normal();
      // z_factor_ is column-major n x n
      for (int64_t col = 0; col < n; ++col) {
        const double x = xi[col];
        const double* f = z_factor_.data() + col * n;
        for (int64_t row = 0; row < n; ++row) psi[row] += f[row] * x;
      }
      std::vector<double> var(n);
      for (int64_t i = 0; i < n; ++i) var[i] = layers_[0].var0() + r_diag_[i];
      multiply_layer(field, exponentiate_layer(psi, opt_.gamma, var));
    } else {
      multiply_layer(field, exponentiate_layer(psi, opt_.gamma, layers_[j].var0()));
    }
  }
  return field;
}

ParityCheckReport parity_independence_check(const std::vector<std::vector<double>>& psi,
                                            const BAdicGrid& grid, int j, double k0,
                                            int max_pairs) {
  const int64_t s_count = static_cast<int64_t>(psi.size());
  if (s_count < 8) throw ArgumentError("parity check needs at least 8 samples");
  if (j < 0 || j > grid.level)
    throw ArgumentError("parity check needs a grid at least as fine as the layer");
  for (const auto& f : psi)
    if (static_cast<int64_t>(f.size()) != grid.n_cells)
      throw ArgumentError("field size does not match the grid");

  const int64_t cells_axis = ipow(grid.b, j);
  const int64_t q = grid.n_axis / cells_axis;  // grid cells per level-j cell, per axis

  // representatives: centers of up to 64 level-j cells, evenly strided
  std::vector<std::vector<int64_t>> reps;  // level-j multi-indices
  int64_t total_cells = 1;
  for (int a = 0; a < grid.d; ++a) total_cells *= cells_axis;
  const int64_t want = 64;
  const int64_t stride = std::max<int64_t>(1, total_cells / want);
  for (int64_t flat = 0; flat < total_cells; flat += stride) {
    std::vector<int64_t> idx(grid.d);
    int64_t rem = flat;
    for (int a = grid.d - 1; a >= 0; --a) {
      idx[a] = rem % cells_axis;
      rem /= cells_axis;
    }
    reps.push_back(std::move(idx));
  }

  auto grid_flat = [&](const std::vector<int64_t>& cell) {
    std::vector<int64_t> g(grid.d);
    for (int a = 0; a < grid.d; ++a) g[a] = cell[a] * q + q / 2;
    return flat_index(grid, g);
  };

  ParityCheckReport rep;
  rep.expected_var = k0;

  // same-cell variance, averaged over representatives
  double var_acc = 0.0;
  for (const auto& cell : reps) {
    const int64_t g = grid_flat(cell);
    double mean = 0.0, m2 = 0.0;
    for (int64_t s = 0; s < s_count; ++s) mean += psi[s][g];
    mean /= static_cast<double>(s_count);
    for (int64_t s = 0; s < s_count; ++s) {
      const double d0 = psi[s][g] - mean;
      m2 += d0 * d0;
    }
    var_acc += m2 / static_cast<double>(s_count - 1);
  }
  rep.same_cell_var = var_acc / static_cast<double>(reps.size());

  for (size_t a = 0; a < reps.size() && rep.n_pairs < max_pairs; ++a) {
    for (size_t c = a + 1; c < reps.size() && rep.n_pairs < max_pairs; ++c) {
      bool same_parity = true;
      double gap2 = 0.0;
      for (int ax = 0; ax < grid.d; ++ax) {
        const int64_t da = std::llabs(reps[a][ax] - reps[c][ax]);
        const int64_t g = std::min(da, cells_axis - da);
        if ((reps[a][ax] & 1) != (reps[c][ax] & 1)) same_parity = false;
        const double gg = static_cast<double>(std::max<int64_t>(0, g - 1));
        gap2 += gg * gg;
      }
      if (!same_parity || gap2 < 1.0) continue;

      const int64_t ga = grid_flat(reps[a]);
      const int64_t gc = grid_flat(reps[c]);
      double ma = 0.0, mc = 0.0;
      for (int64_t s = 0; s < s_count; ++s) {
        ma += psi[s][ga];
        mc += psi[s][gc];
      }
      ma /= static_cast<double>(s_count);
      mc /= static_cast<double>(s_count);
      double va = 0.0, vc = 0.0, cov = 0.0;
      for (int64_t s = 0; s < s_count; ++s) {
        const double xa = psi[s][ga] - ma;
        const double xc = psi[s][gc] - mc;
        va += xa * xa;
        vc += xc * xc;
        cov += xa * xc;
      }
      va /= static_cast<double>(s_count - 1);
      vc /= static_cast<double>(s_count - 1);
      cov /= static_cast<double>(s_count - 1);
      const double se = std::sqrt(std::max(va * vc, 1e-300) /
                                  static_cast<double>(s_count));
      const double z = cov / se;
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
      if (std::abs(z) > 3.0) ++rep.n_outside;
      ++rep.n_pairs;
    }
  }
  rep.pass = rep.n_pairs > 0 && rep.n_outside == 0;
  return rep;
}

}  // namespace mcx
