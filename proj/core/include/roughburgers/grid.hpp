#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roughburgers/matrix.hpp"

namespace rough {

// Uniform grid on [0,1] with m cells; node i sits at i/m, node m is the
// periodic image of node 0.
struct SpatialGrid {
  int m = 0;

  SpatialGrid() = default;
  explicit SpatialGrid(int cells) : m(cells) {
    if (m < 2) throw std::invalid_argument("SpatialGrid: m >= 2 required");
  }
  double h() const { return 1.0 / m; }
  double point(int i) const { return static_cast<double>(i) / m; }
  bool operator==(const SpatialGrid& o) const { return m == o.m; }
  bool operator!=(const SpatialGrid& o) const { return m != o.m; }
};

// R^n-valued samples on the m+1 grid nodes. PDE-side constructors keep
// values[m] == values[0]; rough-path-side paths (e.g. f(x)=x) need not wrap.
class Field {
 public:
  Field() = default;
  Field(SpatialGrid g, int dim)
      : grid_(g), dim_(dim), v_(static_cast<size_t>(g.m + 1) * dim, 0.0) {
    if (dim < 1) throw std::invalid_argument("Field: dim >= 1 required");
  }

  // Sample fn(x) into every node; fn writes dim values.
  static Field sampled(SpatialGrid g, int dim,
                       const std::function<void(double, std::span<double>)>& fn);
  // Scalar convenience.
  static Field sampled_scalar(SpatialGrid g, const std::function<double(double)>& fn);

  const SpatialGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  int points() const { return grid_.m + 1; }

  double& at(int i, int c = 0) { return v_[static_cast<size_t>(i) * dim_ + c]; }
  double at(int i, int c = 0) const { return v_[static_cast<size_t>(i) * dim_ + c]; }
  std::span<double> node(int i) { return {v_.data() + static_cast<size_t>(i) * dim_, static_cast<size_t>(dim_)}; }
  std::span<const double> node(int i) const { return {v_.data() + static_cast<size_t>(i) * dim_, static_cast<size_t>(dim_)}; }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  void close_periodic();           // copy node 0 into node m
  bool is_periodic(double tol = 0.0) const;
  bool all_finite() const;

  double sup_norm() const;         // max over nodes of the Euclidean norm

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  void axpy(double a, const Field& x);  // *this += a*x

 private:
  SpatialGrid grid_;
  int dim_ = 0;
  std::vector<double> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);

// Values R(x_i, x_j) on ordered node pairs i <= j, vanishing on the diagonal.
// payload doubles per pair (1 scalar, n vector, or n*n matrix).
class TwoPointField {
 public:
  TwoPointField() = default;
  TwoPointField(SpatialGrid g, int payload);

  const SpatialGrid& grid() const { return grid_; }
  int payload() const { return payload_; }

  std::span<double> pair(int i, int j);
  std::span<const double> pair(int i, int j) const;
  double value(int i, int j, int c = 0) const { return pair(i, j)[c]; }
  double magnitude(int i, int j) const;  // Euclidean norm of the payload

  int pair_count() const { return (grid_.m + 1) * (grid_.m + 2) / 2; }

 private:
  size_t index(int i, int j) const;
  SpatialGrid grid_;
  int payload_ = 0;
  std::vector<double> v_;
};

// Time-indexed family of Fields on one grid, uniform step dt.
struct SpaceTimeField {
  double dt = 0.0;
  std::vector<Field> slices;

  SpaceTimeField() = default;
  SpaceTimeField(SpatialGrid g, int dim, double dt_, int steps)
      : dt(dt_), slices(static_cast<size_t>(steps) + 1, Field(g, dim)) {
    if (dt_ <= 0.0) throw std::invalid_argument("SpaceTimeField: dt > 0 required");
    if (steps < 1) throw std::invalid_argument("SpaceTimeField: L >= 1 required");
  }
  int steps() const { return static_cast<int>(slices.size()) - 1; }
  double time(int l) const { return l * dt; }
  double horizon() const { return steps() * dt; }
  const SpatialGrid& grid() const { return slices.at(0).grid(); }
  int dim() const { return slices.at(0).dim(); }
};

// delta f (x,y) = f(y) - f(x) on ordered pairs.
TwoPointField delta(const Field& f);

// N R (x,y,z) = R(x,z) - R(x,y) - R(y,z); written into out (payload doubles).
void n_apply(const TwoPointField& R, int i, int j, int k, std::span<double> out);
// Max over all ordered triples of |N R| (Euclidean payload norm).
double n_max_abs(const TwoPointField& R);

double holder_seminorm(const Field& f, double alpha);
// Seminorm together with its maximizing pair.
struct SeminormResult { double value = 0.0; int i = 0, j = 0; };
SeminormResult holder_seminorm_argmax(const Field& f, double alpha);

double two_point_norm(const TwoPointField& R, double gamma);

// Dyadic-lag estimator of the same quantity: max over lags 1,2,4,... only.
// Used for running norms inside time loops; exact norms everywhere else.
double holder_seminorm_dyadic(const Field& f, double alpha);

// Parabolic norm: max over space-time node pairs of
// |u(s,x)-u(t,y)| / (|x-y|^a + |s-t|^{a/2}), plus the sup norm. Mixed pairs
// are dominated by the pure-space and pure-time ratios (triangle inequality
// through the intermediate node), so only those are scanned.
double parabolic_holder(const SpaceTimeField& u, double alpha);
// The seminorm part alone.
double parabolic_holder_seminorm(const SpaceTimeField& u, double alpha);
// Dyadic-lag estimator (both directions) plus sup; in-loop use only.
double parabolic_holder_dyadic(const SpaceTimeField& u, double alpha);

struct ExponentFit {
  double slope = 0.0;
  double residual = 0.0;  // rms residual of the log-log fit
  bool undefined = false; // constant input, no increments to fit
};

// Least-squares slope of log(max increment at dyadic lag) vs log(lag).
// k-window: lags 2^k_lo .. 2^k_hi cells (k_hi < 0 means as large as fits).
ExponentFit estimate_holder_exponent(const Field& f, int k_lo = 2, int k_hi = -1);
// Same estimator on a plain uniformly spaced sample sequence.
ExponentFit estimate_exponent_series(std::span<const double> f, double spacing,
                                     int k_lo = 2, int k_hi = -1);
// Generic log-log least squares for rate studies.
ExponentFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct GrrResult {
  double U = 0.0;            // double integral of (|R|/w(d/4))^p
  double C = 0.0;            // smallest constant making the N-side hold
  TwoPointField bound;       // pointwise bound field
  bool violated = false;     // |R| > 1.05 * bound somewhere
  double worst_ratio = 0.0;  // max |R| / bound
};

// Garsia-Rodemich-Rumsey style pointwise bound with Theta(u) = u^p and
// p(x) = x^{alpha + 2/p}. Requires p >= 2 and alpha + 2/p < 1.
GrrResult grr_bound(const TwoPointField& R, int p, double alpha);

}  // namespace rough
