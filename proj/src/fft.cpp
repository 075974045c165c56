#include "mcx/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

#include "mcx/common.hpp"

namespace mcx::fft {
namespace {

std::mutex plan_mutex;
std::map<std::pair<std::vector<int64_t>, int>, fftw_plan> plan_cache;

fftw_plan get_plan(const std::vector<int64_t>& dims, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_pair(dims, sign);
  auto it = plan_cache.find(key);
  if (it != plan_cache.end()) return it->second;

  // Plan once on scratch buffers with FFTW_UNALIGNED so the plan is valid for
  // any caller buffer via fftw_execute_dft.  ESTIMATE keeps planning
  // deterministic (no runtime measurement).
  size_t n = 1;
  std::vector<int> idims;
  for (int64_t v : dims) {
    idims.push_back(static_cast<int>(v));
    n *= static_cast<size_t>(v);
  }
  fftw_complex* buf = fftw_alloc_complex(n);
  if (!buf) throw ResourceError("fftw_alloc_complex failed");
  fftw_plan p = fftw_plan_dft(static_cast<int>(idims.size()), idims.data(), buf, buf,
                              sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (!p) throw NumericError("fftw planning failed");
  plan_cache.emplace(std::move(key), p);
  return p;
}

}  // namespace

void dft(const std::vector<int64_t>& dims, std::complex<double>* in,
         std::complex<double>* out, int sign) {
  fftw_plan p = get_plan(dims, sign >= 0 ? FFTW_BACKWARD : FFTW_FORWARD);
  // The cached plan is in-place, and new-array execution must match the
  // plan's in-place-ness, so route every call through `out`.
  if (in != out) {
    size_t n = 1;
    for (int64_t v : dims) n *= static_cast<size_t>(v);
    std::copy(in, in + n, out);
  }
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(out),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace mcx::fft
