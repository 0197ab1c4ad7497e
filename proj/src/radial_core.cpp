#include "ksblow/radial_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "ksblow/errors.hpp"

namespace ksblow {

Dimension::Dimension(int d) : d_(d) {
  if (d < 2) throw DomainError("dimension must be >= 2 (got " + std::to_string(d) + ")");
  if (d > kMax) {
    throw DomainError("dimension is capped at " + std::to_string(kMax) + " (got " +
                      std::to_string(d) + ")");
  }
}

FracOrder::FracOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("alpha must be in (0,2] (got " + std::to_string(alpha) + ")");
  }
}

double log_sigma_d(Dimension d) {
  const double h = 0.5 * d.real();
  return std::log(2.0) + h * std::log(std::numbers::pi) - std::lgamma(h);
}

double sigma_d(Dimension d) { return std::exp(log_sigma_d(d)); }

void require_stationary_solution(Dimension d, FracOrder alpha) {
  if (alpha.is_classical()) {
    if (d.value() < 3) {
      throw DomainError("the singular stationary solution 2(d-2)/|x|^2 needs d >= 3");
    }
    return;
  }
  if (!(2.0 * alpha.value() < d.real())) {
    throw DomainError("singular stationary solution requires 2*alpha < d (d=" +
                      std::to_string(d.value()) + ", alpha=" + std::to_string(alpha.value()) +
                      ")");
  }
}

double s_alpha_d(Dimension d, FracOrder alpha) {
  require_stationary_solution(d, alpha);
  const double a = alpha.value();
  const double x = d.real();
  const double log_s = a * std::log(2.0) + std::lgamma((x - a) / 2.0 + 1.0) + std::lgamma(a) -
                       std::lgamma(x / 2.0 - a + 1.0) - std::lgamma(a / 2.0);
  return std::exp(log_s);
}

double potential_gradient_radial(const MassProfile& m, double r) {
  if (!(r > 0.0)) throw DomainError("potential_gradient_radial: r must be positive");
  const Dimension d = m.dim();
  return -std::exp(-log_sigma_d(d) + (2.0 - d.real()) * std::log(r)) * m(r);
}

double sphere_fraction_in_ball(Dimension d, double rho, double a, double R) {
  if (rho + a <= R) return 1.0;
  if (rho >= a + R || rho <= a - R) return 0.0;
  double c = (rho * rho + a * a - R * R) / (2.0 * rho * a);
  c = std::clamp(c, -1.0, 1.0);
  // Normalized area of the cap {theta < acos(c)} on S^{d-1}.
  const double s2 = 1.0 - c * c;
  const double half = 0.5 * boost::math::ibeta(0.5 * (d.real() - 1.0), 0.5, s2);
  return c >= 0.0 ? half : 1.0 - half;
}

}  // namespace ksblow
