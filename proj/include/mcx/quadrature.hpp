#pragma once

#include <functional>

namespace mcx {

// Adaptive Gauss-Kronrod (GSL qag, 61-point rule).  Throws NumericError when
// the requested tolerance cannot be met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-10);

}  // namespace mcx
