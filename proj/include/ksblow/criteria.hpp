#pragma once

// Criterion constants and the blowup / global-existence classifier.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ksblow/kernels.hpp"
#include "ksblow/radial_core.hpp"

namespace ksblow {

/// C(d) = 16/Gamma(d/2) \int_0^inf rho^{d+1} (2(d-2) + 4 rho^2)^{-1} e^{-rho^2} d rho.
double constant_C(Dimension d);

/// C_alpha(d) = 2 sigma_d \int |R'|^2 / |d/drho (rho^{1-d} R')| d rho over a
/// kernel table. Throws NumericalError if the denominator is not positive at
/// some gridpoint.
double constant_C_alpha(const KernelTable& table);

struct KValue {
  double value = 0.0;        // quadrature over the kernel (1 for alpha = 2)
  double closed_form = 0.0;  // Gamma-product form via the subordinator moment
  double residual = 0.0;     // value / closed_form - 1
};

/// t e^{-t(-Laplacian)^{alpha/2}} u_C(0); needs the stationary solution (2 alpha < d).
KValue constant_K(Dimension d, FracOrder alpha);

/// sup_t t e^{-t(-Laplacian)^{alpha/2}}(unit shell)(0) = sup_rho rho^{d-alpha} R(rho).
double constant_L(Dimension d, FracOrder alpha);

/// C/L: shell masses above it are guaranteed to blow up.
double threshold_N(Dimension d, FracOrder alpha);

struct CriterionConstants {
  Dimension d{3};
  FracOrder alpha{2.0};
  double C = 0.0;
  std::optional<KValue> K;  // empty when no stationary singular solution exists
  double L = 0.0;
  double N_threshold = 0.0;
  std::optional<double> upper_bound;  // 2d/(d-2), alpha < 2 and d > 2
  std::optional<KernelValidation> kernel_check;  // alpha < 2
};

/// All constants for (d, alpha). Kernel tables for alpha < 2 are built once
/// per (d, alpha) and shared.
CriterionConstants criterion_constants(Dimension d, FracOrder alpha, int threads = 1);

/// Shared immutable kernel table for (d, alpha).
std::shared_ptr<const KernelTable> shared_kernel_table(Dimension d, FracOrder alpha, int threads = 1);

struct CurveSample {
  double T = 0.0;
  double value = 0.0;  // T * W0(T)
};

struct CriterionCurve {
  std::vector<CurveSample> samples;
  double sup = 0.0;
  double argsup = 0.0;
  bool unimodal = true;  // at most one interior local maximum among samples
};

/// T * e^{-T(-Laplacian)^{alpha/2}} u0 (0) on a geometric T-grid over [T_lo, T_hi].
CriterionCurve criterion_curve(const MassProfile& datum, FracOrder alpha, double T_lo, double T_hi,
                               int per_decade = 32, int threads = 1);

namespace verdict {
struct BlowupBy {
  double T_star;  // least T with T W0(T) > C, refined by bisection
  double margin;  // sup - C
};
struct GlobalBelowSingular {
  double epsilon;
};
struct Indeterminate {
  double blowup_gap;  // C - sup (> 0)
  double global_gap;  // epsilon - 1 (>= 0), inf when epsilon is unbounded
  std::string diagnostics;
};
}  // namespace verdict

using Verdict = std::variant<verdict::BlowupBy, verdict::GlobalBelowSingular, verdict::Indeterminate>;

std::string verdict_name(const Verdict& v);

struct DatumSummary {
  std::string profile;
  ConcentrationValue concentration;
  std::optional<double> total_mass;
  /// sup_r r^alpha u0(r) / s(alpha,d); empty when s(alpha,d) is undefined.
  std::optional<double> epsilon;
};

struct CriterionReport {
  CriterionConstants constants;
  DatumSummary datum;
  CriterionCurve curve;
  Verdict verdict;
  std::vector<std::string> warnings;
};

struct ClassifyOptions {
  int per_decade = 32;
  double T_lo_factor = 1e-4;  // times (characteristic radius)^alpha
  double T_hi_factor = 1e4;
  int threads = 1;
};

CriterionReport classify(const RadialProfile& datum, FracOrder alpha, const ClassifyOptions& opts = {});

/// Lower envelope (1/W0 - t/C)^{-1} for the moment of a blowing-up solution.
/// Throws DomainError at or beyond the pole t = C/W0.
double blowup_rate_bound(double W0, double C, double t);

}  // namespace ksblow
