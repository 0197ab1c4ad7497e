#pragma once

// Finite-difference integration of the radial mass equation
//   M_t = M_rr - (d-1)/r M_r + sigma_d^{-1} r^{1-d} M M_r
// for classical diffusion, with blowup detection and moment tracking.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksblow/radial_core.hpp"

namespace ksblow {

struct GridSpec {
  double r_max = 0.0;           // 0: 100 x characteristic radius of the datum
  int n = 2000;                 // node count
  double inner_fraction = 1e-8; // r_1 = inner_fraction * r_max
  int uniform_patch = 0;        // nodes spaced r_1 apart before the geometric part
};

struct SolverGrid {
  Dimension d{3};
  std::vector<double> r;  // strictly increasing, r[0] > 0, r.back() = r_max

  [[nodiscard]] std::size_t size() const { return r.size(); }
  [[nodiscard]] double r_max() const { return r.back(); }
};

/// Geometric grid from inner_fraction * r_max to r_max with each breakpoint
/// in (r_1, r_max) moved onto its nearest node.
SolverGrid make_grid(Dimension d, const GridSpec& spec, std::span<const double> breakpoints = {});

/// r_max used by run() when GridSpec::r_max is 0.
double default_r_max(const MassProfile& datum);

enum class Integrator {
  Rosenbrock,  // linearly implicit, 2nd order with embedded 1st order estimate (default)
  ExplicitRK,  // Bogacki-Shampine 3(2) under the parabolic limit dt <= 0.5 h_min^2
};

enum class BlowupTrigger { OriginDensityCap, StepFloor };

std::string trigger_name(BlowupTrigger t);

struct BlowupEvent {
  double detected_time = 0.0;
  BlowupTrigger trigger = BlowupTrigger::OriginDensityCap;
  double origin_density = 0.0;
};

struct SimState {
  std::shared_ptr<const SolverGrid> grid;
  std::vector<double> M;
  double t = 0.0;
  double dt = 0.0;
  double origin_density = 0.0;  // M(r_1) d / (sigma_d r_1^d)
  std::optional<BlowupEvent> event;
};

SimState initial_state(std::shared_ptr<const SolverGrid> grid, const MassProfile& datum);

/// Semi-discrete right-hand side; the last node is held fixed (zero entry).
std::vector<double> rhs(const SimState& state);

struct StepResult {
  SimState next;
  double error_norm = 0.0;  // weighted max-norm of the embedded error estimate
  bool admissible = true;   // nonnegative, nondecreasing and finite
};

struct StepTolerances {
  double rtol = 1e-6;
  double atol = 0.0;  // absolute floor for the error weights
};

StepResult step(const SimState& state, double dt, Integrator integrator = Integrator::Rosenbrock,
                const StepTolerances& tol = {});

struct SolverControls {
  double t_end = 1.0;
  std::optional<double> density_cap;  // default 1e8 x initial origin density (1e8 if that is 0)
  std::optional<double> dt_floor;     // default 1e-12 t_end
  double rtol = 1e-6;
  Integrator integrator = Integrator::Rosenbrock;
  std::optional<double> T_target;     // enables W(t) tracking
  std::vector<double> probes;         // radii; empty: {0.1,0.5,1,2,5,10} x characteristic radius
  int stride = 1;                     // record every stride-th accepted step
  std::vector<double> output_times;   // steps land exactly on these; M snapshots kept
  long max_steps = 5'000'000;
};

struct TrajectoryRow {
  double t = 0.0;
  double dt = 0.0;
  double origin_density = 0.0;
  double W = 0.0;  // NaN without a target time or once t >= T_target
  std::vector<double> probes;
  bool blowup = false;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> M;
};

struct RunResult {
  std::shared_ptr<const SolverGrid> grid;
  std::vector<double> probe_radii;
  std::vector<TrajectoryRow> rows;
  std::vector<Snapshot> snapshots;  // at output_times reached before blowup
  SimState final_state;
  std::optional<BlowupEvent> event;
  bool infinite_mass = false;
  double density_cap = 0.0;
  double dt_floor = 0.0;
  double mass_drift = 0.0;  // max |M(r_max,t) - M(r_max,0)| / M(r_max,0)
  long accepted = 0;
  long rejected = 0;
  std::vector<std::string> warnings;
};

/// Integrates to t_end or blowup. alpha must be 2.
RunResult run(const MassProfile& datum, FracOrder alpha, const GridSpec& grid, const SolverControls& controls);
RunResult run(const MassProfile& datum, FracOrder alpha, std::shared_ptr<const SolverGrid> grid,
              const SolverControls& controls);

/// W(t) = \int_0^inf M(r,t) r/(2(T-t)) (4 pi (T-t))^{-d/2} e^{-r^2/(4(T-t))} dr.
double moment_W(const SimState& state, double T);

struct ComparisonReport {
  bool ordered = true;
  int times_checked = 0;
  double checked_until = 0.0;
  double tolerance = 0.0;
  std::optional<double> violation_time;
  std::optional<double> violation_radius;
  double violation_amount = 0.0;
  std::optional<double> low_blowup, high_blowup;
};

/// Co-integrates both data on a common grid and checks M_low <= M_high + tol
/// (tol = 1e-6 max M) at `checks` equally spaced times up to t_end or the first blowup.
ComparisonReport comparison_check(const MassProfile& low, const MassProfile& high, double t_end,
                                  const GridSpec& grid = {}, int checks = 50, int threads = 1);

struct TruncationScaling {
  std::vector<double> radii;
  std::vector<double> blowup_times;
  double exponent = 0.0;  // least-squares slope of ln T vs ln R
  bool conclusive = false;
  std::string message;
};

/// Runs eta u_C 1[r > R] for each R on a common grid (r_max = 100 max R).
TruncationScaling truncation_scaling(Dimension d, double eta, const std::vector<double>& radii,
                                     const GridSpec& grid = {.n = 3000}, int threads = 1);

}  // namespace ksblow
