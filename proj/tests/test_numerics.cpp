#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mcx/common.hpp"
#include "mcx/fft.hpp"
#include "mcx/quadrature.hpp"
#include "mcx/rng.hpp"

using namespace mcx;
using cplx = std::complex<double>;

TEST_CASE("quadrature on smooth integrands") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 2.0) ==
        doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
        doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("quadrature reports an unreachable tolerance") {
  CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, 0.0, 1.0),
                  NumericError);
}

namespace {

// O(N^2) reference transform, same sign convention as mcx::fft::dft.
std::vector<cplx> naive_dft_1d(const std::vector<cplx>& in, int sign) {
  const int64_t n = int64_t(in.size());
  std::vector<cplx> out(in.size());
  for (int64_t k = 0; k < n; ++k) {
    cplx acc(0.0, 0.0);
    for (int64_t t = 0; t < n; ++t) {
      const double ang = double(sign) * 2.0 * std::numbers::pi * double(k * t) / double(n);
      acc += in[size_t(t)] * cplx(std::cos(ang), std::sin(ang));
    }
    out[size_t(k)] = acc;
  }
  return out;
}

std::vector<cplx> random_signal(size_t n, uint64_t seed) {
  RngStream r(seed, 0, 0, 0);
  std::vector<cplx> v(n);
  for (auto& z : v) z = cplx(r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0));
  return v;
}

}  // namespace

TEST_CASE("dft matches the naive transform in 1d") {
  for (int sign : {-1, +1}) {
    std::vector<cplx> in = random_signal(16, 101);
    std::vector<cplx> out(in.size());
    fft::dft({16}, in.data(), out.data(), sign);
    const auto ref = naive_dft_1d(in, sign);
    for (size_t k = 0; k < in.size(); ++k)
      CHECK(std::abs(out[k] - ref[k]) < 1e-12);
  }
}

TEST_CASE("dft matches the naive transform in 2d") {
  const int64_t n0 = 4, n1 = 8;
  std::vector<cplx> in = random_signal(size_t(n0 * n1), 102);
  std::vector<cplx> out(in.size());
  fft::dft({n0, n1}, in.data(), out.data(), -1);
  for (int64_t k0 = 0; k0 < n0; ++k0) {
    for (int64_t k1 = 0; k1 < n1; ++k1) {
      cplx acc(0.0, 0.0);
      for (int64_t t0 = 0; t0 < n0; ++t0) {
        for (int64_t t1 = 0; t1 < n1; ++t1) {
          const double ang = -2.0 * std::numbers::pi *
                             (double(k0 * t0) / double(n0) + double(k1 * t1) / double(n1));
          acc += in[size_t(t0 * n1 + t1)] * cplx(std::cos(ang), std::sin(ang));
        }
      }
      CHECK(std::abs(out[size_t(k0 * n1 + k1)] - acc) < 1e-12);
    }
  }
}

TEST_CASE("dft of a delta is flat") {
  std::vector<cplx> in(32, cplx(0.0, 0.0));
  in[0] = cplx(1.0, 0.0);
  std::vector<cplx> out(in.size());
  fft::dft({32}, in.data(), out.data(), -1);
  for (const auto& z : out) CHECK(std::abs(z - cplx(1.0, 0.0)) < 1e-14);
}

TEST_CASE("forward then backward scales by N") {
  std::vector<cplx> in = random_signal(24, 103);
  std::vector<cplx> mid(in.size()), out(in.size());
  fft::dft({24}, in.data(), mid.data(), -1);
  fft::dft({24}, mid.data(), out.data(), +1);
  for (size_t i = 0; i < in.size(); ++i)
    CHECK(std::abs(out[i] - 24.0 * in[i]) < 1e-12);
}

TEST_CASE("dft works in place") {
  std::vector<cplx> in = random_signal(16, 104);
  std::vector<cplx> copy = in;
  std::vector<cplx> out(in.size());
  fft::dft({16}, copy.data(), out.data(), -1);
  fft::dft({16}, in.data(), in.data(), -1);
  for (size_t i = 0; i < in.size(); ++i) CHECK(std::abs(in[i] - out[i]) < 1e-12);
}
