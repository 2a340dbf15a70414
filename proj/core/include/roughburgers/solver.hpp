#pragma once

#include <functional>
#include <memory>
#include <string>

#include "roughburgers/stoch_conv.hpp"

namespace rough {

// u -> R^{n x n} coefficient map with analytic derivatives.
// deriv layout: [a][b][e] = d g_ab / d u_e (n^3 doubles).
struct MatrixFn {
  int n = 1;
  std::string name;
  bool zero = false;
  bool identity = false;
  std::function<void(std::span<const double>, std::span<double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> deriv;
  std::function<void(std::span<const double>, std::span<double>)> deriv2;  // optional
};

// Built-in coefficient maps, addressable from config files.
// g: "zero", "linear" (n=1, g=u), "sin" (n=1, g=sin u), "pure_area" (n=2)
// theta: "zero", "one" (n=1), "identity", "inv_sqrt" (n=1, (1+u^2)^{-1/2})
MatrixFn builtin_g(const std::string& name, int n);
MatrixFn builtin_theta(const std::string& name, int n);

struct SolverConfig {
  int n = 1;
  MatrixFn g, theta;
  Field u0;
  double alpha = 0.4, beta = 0.45;
  int m = 256;
  double dt = 1e-4;
  double T = 0.1;
  double K1 = 10.0, K2 = 10.0, K3 = 10.0, K4 = 10.0;
  double K5 = -1.0;  // defaults to K4 + K2 + K3
  double picard_tol = 1e-7;
  int max_iters = 25;
  double inner_tol = 1e-9;
  int inner_max_iters = 60;
  std::uint64_t seed = 1;
  double eps = 0.0;          // mollification scale, 0 = off
  Matrix area_modifier;      // reference-lift shift, zero = canonical
  Matrix reaction_area;      // explicit correction forcing Dg(u)(theta a theta^T)

  double k5() const { return K5 > 0.0 ? K5 : K4 + K2 + K3; }
  int steps() const { return static_cast<int>(std::llround(T / dt)); }
  NoiseSpec noise_spec() const { return NoiseSpec{n, m, dt, seed, T}; }
  void validate() const;
};

// chi_K: 1 on (-infty, K], (K/x)(2 - K/x) beyond; C^1, decreasing,
// |chi'| <= 1 and x chi(x) <= 2K for K >= 8/27.
double cutoff_chi(double x, double K);

// beta-Hoelder test initial data: mode sum with (2 pi k)^{-(beta+1/2)} decay.
Field sample_beta_holder(SpatialGrid g, int n, double beta, std::uint64_t seed,
                         double amplitude = 1.0);

struct InnerState {
  SpaceTimeField v;
  SpaceTimeField dv;  // exact spectral derivative of v per slice
};

struct InnerDivergence : std::runtime_error {
  std::vector<double> residual_history;
  explicit InnerDivergence(std::vector<double> hist)
      : std::runtime_error("inner fixed point did not converge"),
        residual_history(std::move(hist)) {}
};
struct OuterDivergence : std::runtime_error {
  std::vector<double> residual_history;
  explicit OuterDivergence(std::vector<double> hist)
      : std::runtime_error("outer iteration did not converge"),
        residual_history(std::move(hist)) {}
};

// The Duhamel map on v for fixed Psi, U, X: reaction part through the
// semigroup, rough part through kernel-smoothed compensated cell increments.
class InnerSolver {
 public:
  InnerSolver(const SolverConfig& cfg, const SpaceTimeField& U, const SpaceTimeField& dU,
              const ControlledConvolution* psi);

  InnerState apply(const InnerState& vin) const;
  InnerState fixed_point(std::vector<double>* residual_history = nullptr) const;
  InnerState zero_state() const;

 private:
  Field rough_increment_cells(int l, const Field& u_l) const;
  const SolverConfig& cfg_;
  const SpaceTimeField& U_;
  const SpaceTimeField& dU_;
  const ControlledConvolution* psi_;  // null when theta == 0
  int L_;
};

struct MonitorReport {
  bool triggered = false;
  double triggered_at = -1.0;
  double sup_x = 0.0, sup_psi = 0.0, sup_remainder = 0.0;
};

struct SolutionBundle {
  SolverConfig cfg;
  SpaceTimeField u, U;
  std::shared_ptr<const GaussianField> X;  // null in the noise-free path
  ControlledConvolution psi;               // cutoff-applied; empty if no noise
  InnerState v;
  MonitorReport monitor;
  int outer_iterations = 0;
  std::vector<double> outer_residuals;
  std::vector<std::vector<double>> inner_histories;
  long long noise_draws = 0;
  int chunks = 1;
  bool has_noise = false;
};

// Pathwise Picard over u -> U + Psi_K2^{theta(u)} + v on one interval.
SolutionBundle outer_picard(const SolverConfig& cfg, const NoiseSource& noise);

// Global solve: partitions [0,T], restarts the reference field per chunk,
// halves chunks on non-convergence. force_chunks > 0 pins the partition.
SolutionBundle solve(const SolverConfig& cfg, int force_chunks = 0);
SolutionBundle solve_mollified(const SolverConfig& cfg, int force_chunks = 0);

// Smooth periodic test function with analytic derivatives.
struct TestFn {
  std::function<double(double)> phi, dphi, d2phi;
};

struct WeakFormResidual {
  std::vector<double> residual;  // per test function
  std::vector<double> scale;     // sum of |term| magnitudes per test function
};

WeakFormResidual weak_form_residual(const SolutionBundle& b, std::span<const TestFn> testfns);

struct CorrectionReport {
  SolutionBundle plain, shifted, forced;  // A, B, C
  double diff_shift_forced = 0.0;         // ||B - C||
  double diff_shift_plain = 0.0;          // ||B - A||
  double ratio = 0.0;                     // BC / BA, 0 when a == 0 (exact match)
  bool exact_match = false;               // a == 0 sentinel
};

CorrectionReport correction_experiment(const SolverConfig& cfg, const Matrix& a);

struct GradientCheck {
  double rough_side = 0.0;      // int phi g(u) d_x u
  double primitive_side = 0.0;  // -int phi' G(u) dx
  double discrepancy = 0.0;
  double term_scale = 0.0;
};

// Both sides of the gradient-case rewrite on one slice; geometric lifts only.
GradientCheck gradient_consistency(const ControlledPath& u, const SmoothMap& g,
                                   const std::function<double(std::span<const double>)>& primitive,
                                   const TestFn& phi);

}  // namespace rough
