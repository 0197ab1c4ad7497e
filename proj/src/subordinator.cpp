#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ksblow/errors.hpp"
#include "ksblow/kernels.hpp"

namespace ksblow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLeftSwitch = 600.0;  // exponent above which the asymptotic is used
constexpr double kUnderflow = 740.0;
constexpr double kSMax = 80.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw_domain("subordinator index beta must be in (0,1) (got " + std::to_string(beta) + ")");
  }
}

// (1-beta) beta^{beta/(1-beta)}: the coefficient of lambda^{-beta/(1-beta)}
// in the left-tail exponent.
double left_rate(double beta) {
  return (1.0 - beta) * std::exp(beta / (1.0 - beta) * std::log(beta));
}

double levy(double lambda) {
  return std::exp(-1.5 * std::log(lambda) - 0.25 / lambda) / (2.0 * std::sqrt(kPi));
}

double right_series(double beta, double lambda) {
  const double x = std::exp(-beta * std::log(lambda));  // lambda^{-beta}
  double sum = 0.0;
  for (int n = 1; n < 400; ++n) {
    const double sn = std::sin(n * kPi * beta);
    const double mag = std::exp(std::lgamma(n * beta + 1.0) - std::lgamma(n + 1.0) + n * std::log(x));
    const double term = (n % 2 == 1 ? 1.0 : -1.0) * mag * sn;
    sum += term;
    if (mag < 1e-18 * std::abs(sum)) break;
  }
  return sum / (kPi * lambda);
}

// Logarithm of the density from the Zolotarev integral; no underflow even
// deep in the left tail. The integrand a e^{-k(a - a0)} rises steeply with
// theta and is cut off where k a ~ 1, so the range is split at the points
// where k a(theta) = 0.1, 1, 10 and the last piece is integrated in
// phi = pi - theta.
double log_zolotarev(double beta, double lambda) {
  const double q = 1.0 / (1.0 - beta);
  const double log_k = -beta * q * std::log(lambda);
  const double k = std::exp(log_k);
  const double a0 = left_rate(beta);
  auto log_a = [&](double theta, double phi) {
    const double s_theta = std::sin(phi < theta ? phi : theta);
    const double s_beta = std::sin(beta * theta);
    const double s_rest = std::sin((1.0 - beta) * theta);
    if (s_theta <= 0.0 || s_beta <= 0.0 || s_rest <= 0.0) return -kInf;
    return q * (beta * std::log(s_beta) + (1.0 - beta) * std::log(s_rest) - std::log(s_theta));
  };
  auto integrand = [&](double theta, double phi) {
    const double la = log_a(theta, phi);
    if (!(la > -kInf) || la > 700.0) return 0.0;
    const double expo = la - k * (std::exp(la) - a0);
    return expo < -745.0 ? 0.0 : std::exp(expo);
  };
  // a(theta) increases from a0 to inf on (0, pi).
  std::vector<double> cuts{0.0};
  for (double target : {0.1, 1.0, 10.0}) {
    const double log_target = std::log(target) - log_k;
    if (!(log_target > std::log(a0))) continue;
    double lo = cuts.back(), hi = kPi;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (log_a(mid, kPi - mid) < log_target ? lo : hi) = mid;
    }
    if (hi > cuts.back() && hi < kPi) cuts.push_back(hi);
  }
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  double value = 0.0, err_total = 0.0, l1_total = 0.0;
  try {
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      double err = 0.0, l1 = 0.0;
      if (i + 1 < cuts.size()) {
        value += rule.integrate([&](double th) { return integrand(th, kPi - th); }, cuts[i],
                                cuts[i + 1], 1e-12, &err, &l1);
      } else {
        value += rule.integrate([&](double ph) { return integrand(kPi - ph, ph); }, 0.0,
                                kPi - cuts[i], 1e-12, &err, &l1);
      }
      err_total += err;
      l1_total += l1;
    }
  } catch (const std::exception& ex) {
    throw NumericalError("stable density quadrature failed at beta=" + std::to_string(beta) +
                         ", lambda=" + std::to_string(lambda) + ": " + ex.what());
  }
  if (!std::isfinite(value) || !(value > 0.0) || err_total > 1e-8 * l1_total) {
    throw NumericalError("stable density quadrature did not converge at beta=" +
                         std::to_string(beta) + ", lambda=" + std::to_string(lambda) +
                         " (error estimate " + std::to_string(err_total) + ", L1 " +
                         std::to_string(l1_total) + ")");
  }
  const double log_pref = std::log(beta * q / kPi) - q * std::log(lambda) - k * a0;
  return log_pref + std::log(value);
}

double log_left_asymptotic(double beta, double lambda) {
  const double q = 1.0 / (1.0 - beta);
  return -0.5 * std::log(2.0 * kPi * (1.0 - beta)) + 0.5 * q * std::log(beta) -
         0.5 * (2.0 - beta) * q * std::log(lambda) -
         left_rate(beta) * std::exp(-beta * q * std::log(lambda));
}

// Log density; the left asymptotic takes over once its exponent exceeds
// `left_switch`.
double log_density(double beta, double lambda, double left_switch) {
  if (beta == 0.5) return -1.5 * std::log(lambda) - 0.25 / lambda - std::log(2.0 * std::sqrt(kPi));
  if (std::exp(-beta * std::log(lambda)) <= 0.5) return std::log(right_series(beta, lambda));
  const double expo = left_rate(beta) * std::exp(-beta / (1.0 - beta) * std::log(lambda));
  if (expo > left_switch) return log_left_asymptotic(beta, lambda);
  return log_zolotarev(beta, lambda);
}

}  // namespace

double subordinator_left_asymptotic(double beta, double lambda) {
  check_beta(beta);
  return std::exp(log_left_asymptotic(beta, lambda));
}

double subordinator_density(double beta, double lambda) {
  check_beta(beta);
  if (!(lambda > 0.0)) {
    if (lambda == 0.0) return 0.0;
    throw_domain("subordinator density needs lambda > 0");
  }
  if (std::isinf(lambda)) return 0.0;
  if (beta == 0.5) return levy(lambda);
  return std::exp(log_density(beta, lambda, kLeftSwitch));
}

double subordinator_negative_moment(double beta, double s) {
  check_beta(beta);
  if (!(s > -beta)) throw_domain("negative moment needs s > -beta");
  return std::exp(std::lgamma(1.0 + s / beta) - std::lgamma(1.0 + s));
}

StableSubordinator::StableSubordinator(double beta, double weight_power)
    : beta_(beta), weight_power_(weight_power) {
  check_beta(beta);
  h_ = std::min(0.02, 0.05 * (1.0 - beta));
  // phi(s) = c e^{-gamma s} + p s is minus the log of f(e^s) e^{-p s} up to
  // slowly varying terms; start where it exceeds its minimum by 740.
  const double c = left_rate(beta);
  const double gamma = beta / (1.0 - beta);
  const double p = weight_power;
  auto phi = [&](double s) { return c * std::exp(-gamma * s) + p * s; };
  const double s_star = p > 0.0 ? std::log(c * gamma / p) / gamma : 50.0;
  const double target = (p > 0.0 ? phi(s_star) : 0.0) + kUnderflow;
  double lo = std::min(s_star, 0.0) - 1.0;
  while (phi(lo) < target) lo -= 2.0 * (1.0 + std::abs(lo));
  double hi = std::min(s_star, 50.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < target ? hi : lo) = mid;
  }
  const double s_min = lo;
  const auto n = static_cast<std::size_t>(std::ceil((kSMax - s_min) / h_)) + 1;
  s_.resize(n);
  lambda_.resize(n);
  logw_.resize(n);
  w_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s_[j] = s_min + static_cast<double>(j) * h_;
    lambda_[j] = std::exp(s_[j]);
    const double left_switch = kLeftSwitch + p * std::max(0.0, -s_[j]);
    logw_[j] = std::log(h_) + log_density(beta, lambda_[j], left_switch) + s_[j];
    w_[j] = std::exp(logw_[j]);
  }
}

double StableSubordinator::upper_tail_mass() const {
  // Large-lambda series integrated term by term beyond the last node.
  const double x = std::exp(-beta_ * s_.back());
  double sum = 0.0;
  for (int n = 1; n < 400; ++n) {
    const double mag =
        std::exp(std::lgamma(n * beta_ + 1.0) - std::lgamma(n + 1.0) + n * std::log(x)) / (n * beta_);
    sum += (n % 2 == 1 ? 1.0 : -1.0) * mag * std::sin(n * kPi * beta_);
    if (mag < 1e-18 * std::abs(sum)) break;
  }
  // The trapezoid rule gave the last node full weight h; half of it belongs
  // to the tail.
  return sum / kPi - 0.5 * w_.back();
}

}  // namespace ksblow
