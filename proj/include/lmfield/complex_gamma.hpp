#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace lmf {

/// log Gamma(z) for Re z > 0 via a 14-term Lanczos series (g = 671/128).
/// Relative accuracy of exp(result) is about 1e-15 on the right half plane.
inline std::complex<double> log_gamma(std::complex<double> z) {
  static constexpr std::array<double, 14> coef = {
      57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
      -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
      -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
      .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
      -.261908384015814087e-4, .368991826595316234e-5};
  // Shift small arguments up with the recurrence to stay in the accurate range.
  std::complex<double> shift{0.0, 0.0};
  while (z.real() < 1.0) {
    shift -= std::log(z);
    z += 1.0;
  }
  std::complex<double> y = z;
  std::complex<double> tmp = z + 5.24218750000000000;
  tmp = (z + 0.5) * std::log(tmp) - tmp;
  std::complex<double> ser = 0.999999999999997092;
  for (double c : coef) {
    y += 1.0;
    ser += c / y;
  }
  return tmp + std::log(2.5066282746310005 * ser / z) + shift;
}

/// |Gamma(mu + i x)|^2 computed as exp(2 Re log Gamma).
inline double gamma_abs2(double mu, double x) {
  return std::exp(2.0 * log_gamma({mu, x}).real());
}

inline double log_gamma_abs2(double mu, double x) { return 2.0 * log_gamma({mu, x}).real(); }

}  // namespace lmf
