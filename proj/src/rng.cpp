#include "fvc/rng.hpp"

#include <cmath>

namespace fvc {

double Rng::normal() {
  // Box-Muller on two fresh uniforms; u clamped away from 0 for the log.
  double u = next_double();
  const double v = next_double();
  if (u < 1e-300) u = 1e-300;
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * v);
}

}  // namespace fvc
