#pragma once

#include <functional>
#include <memory>
#include <span>

#include "roughburgers/grid.hpp"
#include "roughburgers/matrix.hpp"

namespace rough {

// A path X on the grid together with per-cell second-level increments; pair
// values come from Chen composition of the cells, which makes
// N XX (x,y,z) = dX(x,y) (x) dX(y,z) an algebraic identity.
class RoughPath {
 public:
  RoughPath(Field base, std::vector<double> cell_iterated);

  // Canonical lift of the piecewise-linear interpolant:
  // cell value (1/2) dX (x) dX, a geometric lift.
  static RoughPath lift_piecewise_linear(const Field& f);

  const Field& base() const { return base_; }
  int n() const { return base_.dim(); }
  int cells() const { return base_.grid().m; }
  std::span<const double> cell(int i) const;

  // XX(x_i, x_j), n x n; O(1) via prefix sums.
  void chen_query(int i, int j, std::span<double> out) const;
  Matrix chen_query(int i, int j) const;

  // Adds (y - x) * a to every pair (cell contribution h * a); Chen relation
  // is preserved since N annihilates additive-in-interval terms.
  RoughPath modify_levy_area(const Matrix& a) const;

  // max over triples of |N XX - dX (x) dX| (all triples when m is small,
  // a deterministic stride sample otherwise).
  double chen_residual() const;

  // |XX|_{2 alpha} over all pairs.
  double two_level_norm(double two_alpha) const;
  // Dyadic-lag variant for in-loop monitors.
  double two_level_norm_dyadic(double two_alpha) const;

  // max |Sym XX(x,y) - (1/2) dX (x) dX| over pairs (geometricity defect).
  double geometricity_defect() const;

 private:
  void build_prefixes();
  Field base_;
  std::vector<double> cells_;  // m * n * n
  std::vector<double> pref_cell_;  // (m+1) * n * n: sum of cells < i
  std::vector<double> pref_xdx_;   // (m+1) * n * n: sum_{k<i} X(k) (x) dX(k,k+1)
};

// (Y, Y') relative to a reference rough path; the remainder
// R_Y(x,y) = dY(x,y) - Y'(x) dX(x,y) is derived on demand.
class ControlledPath {
 public:
  ControlledPath(std::shared_ptr<const RoughPath> ref, Field y, Field yprime);

  const Field& y() const { return y_; }
  const Field& yprime() const { return yp_; }
  int p() const { return y_.dim(); }
  const std::shared_ptr<const RoughPath>& reference() const { return ref_; }

  TwoPointField remainder() const;
  double remainder_norm(double two_alpha) const;
  double remainder_norm_dyadic(double two_alpha) const;

 private:
  std::shared_ptr<const RoughPath> ref_;
  Field y_;    // dim p
  Field yp_;   // dim p * n, row-major [a][c]
};

ControlledPath make_controlled(Field y, Field yprime,
                               std::shared_ptr<const RoughPath> rp);

// Smooth map R^d -> R^p with Jacobian, for composing with controlled paths.
struct SmoothMap {
  int d = 1, p = 1;
  std::function<void(std::span<const double>, std::span<double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> jacobian;  // p*d
};

// Y = g(psi + w), Y' = Dg(psi + w) psi'; w is a smoother additive part whose
// increments land in the remainder.
ControlledPath compose_smooth(const SmoothMap& g, const ControlledPath& psi,
                              const Field& w);

struct RoughIntegralResult {
  Matrix total;              // p x q compensated-scheme value over [0,1]
  Matrix total_first_order;  // plain left-point Riemann sum
  TwoPointField partials;    // payload p*q, compensated sums over [x_i, x_j]
  TwoPointField q_remainder; // partials minus the two leading terms
};

// Compensated-sum rough integral of Y against dZ at the grid resolution.
// Y and Z must share the same reference rough path.
RoughIntegralResult rough_integral(const ControlledPath& y, const ControlledPath& z);

// Totals only, O(m); same values as rough_integral().total.
Matrix rough_integral_total(const ControlledPath& y, const ControlledPath& z);

struct KernelWeightedIntegral {
  Matrix total;
  double magnitude = 0.0;
  double scaling_ratio = 0.0;  // |total| / (f11 * lambda^{-alpha})
};

// int f(lambda x) Y dZ by folding f(lambda .) into the integrand; the smooth
// factor multiplies Y' and pushes its own increments into the remainder.
KernelWeightedIntegral kernel_weighted_rough_integral(
    const std::function<double(double)>& f, double f11, double lambda,
    double alpha, const ControlledPath& y, const ControlledPath& z);

// | int (int f dlambda) Y dZ - int (int f Y dZ) dlambda | with the trapezoid
// rule on a uniform lambda grid over [0,1].
double fubini_discrepancy(const std::function<double(double, double)>& f,
                          int lambda_nodes, const ControlledPath& y,
                          const ControlledPath& z);

}  // namespace rough
