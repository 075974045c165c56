#include "mcx/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <memory>
#include <string>

#include "mcx/common.hpp"

namespace mcx {
namespace {

// GSL aborts by default; disable that once, we check return codes ourselves.
const int kHandlerOff = [] {
  gsl_set_error_handler_off();
  return 0;
}();

double call_thunk(double x, void* params) {
  auto* f = static_cast<const std::function<double(double)>*>(params);
  return (*f)(x);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol) {
  (void)kHandlerOff;
  if (a == b) return 0.0;
  std::unique_ptr<gsl_integration_workspace,
                  decltype(&gsl_integration_workspace_free)>
      ws(gsl_integration_workspace_alloc(4000), gsl_integration_workspace_free);
  gsl_function gf;
  gf.function = &call_thunk;
  gf.params = const_cast<std::function<double(double)>*>(&f);
  double result = 0.0, abserr = 0.0;
  int rc = gsl_integration_qag(&gf, a, b, abs_tol, rel_tol, 4000,
                               GSL_INTEG_GAUSS61, ws.get(), &result, &abserr);
  if (rc != GSL_SUCCESS && rc != GSL_EROUND) {
    throw NumericError("quadrature failed (gsl code " + std::to_string(rc) +
                           ", est. error " + std::to_string(abserr) + ")",
                       abserr);
  }
  return result;
}

}  // namespace mcx
