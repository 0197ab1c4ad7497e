#pragma once

// Heat and fractional-heat kernels restricted to radial arguments.
//
// The kernel of exp(-t(-Laplacian)^{alpha/2}) is t^{-d/alpha} R(|x| t^{-1/alpha}).
// For alpha < 2 it is obtained by subordinating the Gauss-Weierstrass kernel
// with the one-sided stable density of index beta = alpha/2 (Laplace
// transform exp(-a^beta)); alpha = 2 is the Gaussian itself.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksblow/radial_core.hpp"

namespace ksblow {

/// (4 pi)^{-d/2} exp(-rho^2/4).
double gauss_kernel(Dimension d, double rho);

/// One-sided stable density f_{1,beta}(lambda), Laplace transform exp(-a^beta).
/// beta = 1/2 uses the explicit Levy density; other indices use Zolotarev's
/// single-integral representation, the convergent large-lambda series, or the
/// small-lambda asymptotic, whichever is accurate at lambda.
double subordinator_density(double beta, double lambda);

/// Leading small-lambda asymptotic of the stable density (exact for beta = 1/2).
double subordinator_left_asymptotic(double beta, double lambda);

/// E[lambda^{-s}] = Gamma(1 + s/beta) / Gamma(1 + s) for s > -beta.
double subordinator_negative_moment(double beta, double s);

/// Stable density tabulated on a uniform grid in s = ln(lambda). The trapezoid
/// rule on this grid integrates analytic weights with spectral accuracy.
class StableSubordinator {
 public:
  /// `weight_power` p extends the grid to the left far enough that
  /// f(lambda) lambda^{-p} is resolved (p = d/2 for kernels in dimension d).
  explicit StableSubordinator(double beta, double weight_power = 0.0);

  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] double step() const { return h_; }
  [[nodiscard]] std::span<const double> s_nodes() const { return s_; }
  /// h * f(e^s) e^s at each node.
  [[nodiscard]] std::span<const double> weights() const { return w_; }
  [[nodiscard]] std::span<const double> log_weights() const { return logw_; }
  [[nodiscard]] std::span<const double> lambdas() const { return lambda_; }

  /// \int_0^inf f(lambda) phi(lambda) d lambda over the cached grid.
  template <class Phi>
  double integrate(Phi&& phi) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j) acc += w_[j] * phi(lambda_[j]);
    return acc;
  }
  /// Mass of f above the last cached node.
  [[nodiscard]] double upper_tail_mass() const;

 private:
  double beta_;
  double weight_power_;
  double h_;
  std::vector<double> s_, lambda_, logw_, w_;
};

struct KernelValues {
  double R = 0.0;
  double Rp = 0.0;
  double Rpp = 0.0;
};

/// Profile R of the kernel of exp(-(-Laplacian)^{alpha/2}) at unit time with
/// derivatives obtained by differentiating under the subordination integral.
class RadialKernel {
 public:
  RadialKernel(Dimension d, FracOrder alpha);

  [[nodiscard]] Dimension dim() const { return d_; }
  [[nodiscard]] FracOrder alpha() const { return alpha_; }

  [[nodiscard]] KernelValues at(double rho) const;
  [[nodiscard]] double R(double rho) const { return at(rho).R; }
  [[nodiscard]] double Rp(double rho) const { return at(rho).Rp; }

  /// R(0) = 2 Gamma(d/alpha) / (alpha (4 pi)^{d/2} Gamma(d/2)).
  [[nodiscard]] double R0() const;

  /// Large-rho expansion R ~ sum_n c_n rho^{-n alpha - d} (empty for alpha = 2).
  [[nodiscard]] std::span<const double> tail_coefficients() const { return tail_; }
  /// Evaluates the large-rho expansion; nullopt if it has not converged at rho.
  [[nodiscard]] std::optional<KernelValues> tail_expansion(double rho) const;

  /// Full kernel P_{t,alpha}(r) = t^{-d/alpha} R(r t^{-1/alpha}).
  [[nodiscard]] double full(double t, double r) const;

 private:
  [[nodiscard]] KernelValues subordinated(double rho) const;

  Dimension d_;
  FracOrder alpha_;
  std::shared_ptr<const StableSubordinator> sub_;
  std::vector<double> base_;      // w_j (4 pi lambda_j)^{-d/2}
  std::vector<double> inv4l_;     // 1/(4 lambda_j)
  std::vector<double> tail_;      // c_n
  std::vector<double> tail_log_;  // ln of |c_n| without the sine factor
  double series_switch_ = 1e3;    // rho above which the expansion is used
};

struct TailFit {
  double coefficient = 0.0;  // c in |F| ~ c rho^p
  double exponent = 0.0;     // p
  bool algebraic = true;     // false for the Gaussian (alpha = 2)
};

struct KernelGrid {
  double rho_min = 1e-4;
  double rho_max = 1e3;
  int per_decade = 48;
};

/// Tabulated R, R', R'' on a geometric grid plus tail-law metadata.
struct KernelTable {
  Dimension d{3};
  FracOrder alpha{2.0};
  std::vector<double> rho, R, Rp, Rpp;
  TailFit tail_R, tail_Rp, tail_Rpp;
  double R0 = 0.0;
  std::shared_ptr<const RadialKernel> kernel;
};

/// Builds the table (gridpoints in parallel on `threads` workers) and rejects
/// it with a residual report if either normalization identity fails by more
/// than 1e-6.
KernelTable kernel_R(Dimension d, FracOrder alpha, const KernelGrid& grid = {}, int threads = 1);

struct KernelValidation {
  double mass_residual = 0.0;        // sigma_d \int R rho^{d-1} - 1
  double derivative_residual = 0.0;  // (sigma_d/d) \int |R'| rho^d - 1
  double tail_exponent_error_R = 0.0;    // relative deviation from -d-alpha
  double tail_exponent_error_Rp = 0.0;   // from -d-1-alpha
  double tail_exponent_error_Rpp = 0.0;  // from -d-2-alpha
  bool tail_checked = true;              // false for alpha = 2 (no algebraic tail)
  bool derivative_negative = true;       // R' < 0 on the grid
  bool convexity_ok = true;              // rho R'' - R' >= 0 on the grid
  bool weighted_monotone = true;         // rho^{1-d}|R'| strictly decreasing
  std::size_t underflow_points = 0;      // gridpoints skipped because R underflowed
  std::vector<std::string> failures;

  [[nodiscard]] bool passed() const { return failures.empty(); }
};

KernelValidation validate_kernel(const KernelTable& table);

/// \int_0^inf F(rho, R, R', R'') d rho over the table: trapezoid in ln(rho),
/// a power-law head below rho_min and the large-rho expansion beyond rho_max.
template <class F>
double table_integral(const KernelTable& table, F&& integrand);

/// exp(-t(-Laplacian)^{alpha/2}) u0 evaluated at the origin, in the measure
/// form t^{-(d+1)/alpha} \int M(r) |R'(r t^{-1/alpha})| dr.
double semigroup_at_origin(const RadialKernel& kernel, double t, const MassProfile& datum);

/// Throws DivergenceError unless \int u0 (1+|x|)^{-d-alpha} dx < inf.
void require_integrable(const MassProfile& datum, FracOrder alpha);

// ---------------------------------------------------------------------------

namespace detail {
double table_integral_impl(const KernelTable& table,
                           const std::function<double(double, const KernelValues&)>& f);
}

template <class F>
double table_integral(const KernelTable& table, F&& integrand) {
  return detail::table_integral_impl(
      table, [&](double rho, const KernelValues& v) { return integrand(rho, v); });
}

}  // namespace ksblow
