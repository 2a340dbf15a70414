#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "roughburgers/grid.hpp"
#include "roughburgers/rng.hpp"

namespace rough {

struct NoiseSpec {
  int n = 1;
  int m = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double T = 0.0;

  void validate() const;
  int steps() const;  // round(T / dt)
};

// Cell-averaged white-noise increments for one time step: values[cell][comp]
// = (1/h) int_cell (W(t+dt) - W(t)), Gaussian with variance dt * m.
struct NoiseIncrement {
  int step = 0;
  int m = 0, n = 0;
  std::vector<double> values;  // m * n

  double at(int cell, int c = 0) const { return values[static_cast<size_t>(cell) * n + c]; }
  double& at(int cell, int c = 0) { return values[static_cast<size_t>(cell) * n + c]; }
};

class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual NoiseIncrement increments(int step) const = 0;
  virtual const NoiseSpec& spec() const = 0;
  long long draws() const { return draws_.load(); }

 protected:
  mutable std::atomic<long long> draws_{0};
};

// Counter-based generator: the full noise tensor is a pure function of
// (seed, step, cell, component).
class GeneratorNoise : public NoiseSource {
 public:
  explicit GeneratorNoise(NoiseSpec spec);
  NoiseIncrement increments(int step) const override;
  const NoiseSpec& spec() const override { return spec_; }
  const CounterRng& rng() const { return rng_; }

 private:
  NoiseSpec spec_;
  CounterRng rng_;
};

// Replay from a binary file written by save_noise.
class ReplayNoise : public NoiseSource {
 public:
  explicit ReplayNoise(const std::string& path);
  NoiseIncrement increments(int step) const override;
  const NoiseSpec& spec() const override { return spec_; }

 private:
  NoiseSpec spec_;
  std::vector<double> data_;  // step-major
};

void save_noise(const NoiseSource& src, const std::string& path);

// View of a base stream shifted by a step offset; local step l reads the
// base at offset + l. Used to restart solves mid-stream.
class WindowedNoise : public NoiseSource {
 public:
  WindowedNoise(const NoiseSource& base, int offset_steps, int steps);
  NoiseIncrement increments(int step) const override;
  const NoiseSpec& spec() const override { return spec_; }

 private:
  const NoiseSource& base_;
  int offset_;
  NoiseSpec spec_;
};

// Compactly supported bump c exp(-1/(1-x^2)) on (-1,1), unit mass; eta_eps
// is the eps-rescaling.
struct Mollifier {
  double eps = 0.0;
  explicit Mollifier(double eps_);
  double density(double x) const;  // eta_eps(x)
  static double profile(double x); // unit-scale eta
};

// Periodic discrete convolution of the cell values with eta_eps sampled at
// cell offsets, renormalized to unit discrete mass. eps <= 0 rejected.
NoiseIncrement mollify(const NoiseIncrement& inc, double eps, const SpatialGrid& g);
bool mollifier_underresolved(double eps, const SpatialGrid& g);  // eps < 2h

// Samples of a two-variable function on an (nx+1) x (ny+1) node grid.
struct GridFunction2D {
  int nx = 0, ny = 0;
  std::vector<double> v;  // row-major, (nx+1)*(ny+1)

  GridFunction2D() = default;
  GridFunction2D(int nx_, int ny_) : nx(nx_), ny(ny_), v(static_cast<size_t>(nx_ + 1) * (ny_ + 1), 0.0) {}
  double& at(int i, int j) { return v[static_cast<size_t>(i) * (ny + 1) + j]; }
  double at(int i, int j) const { return v[static_cast<size_t>(i) * (ny + 1) + j]; }
};

struct RhoVariationResult {
  double value = 0.0;
  bool exact = false;  // true for rho = 1 (finest partition realizes the sup)
};

// Two-dimensional rho-variation over the index rectangle
// [i0,i1] x [j0,j1]. rho = 1: finest-partition sum (exact on the grid);
// rho > 1: max over the dyadic partition ladder, a lower bound.
RhoVariationResult rho_variation(const GridFunction2D& K, double rho,
                                 int i0, int i1, int j0, int j1);
RhoVariationResult rho_variation(const GridFunction2D& K, double rho);

// Analytic pieces of the stationary covariance of the linear equation.
double covariance_k1_closed(double x);                    // |x|/2 - x^2/2 - 1/12, periodic
double covariance_mode_sum(double t, double x, int kmax); // K_t(x) truncated

struct CovarianceEstimate {
  int samples = 0;
  double t = 0.0;
  Matrix empirical;        // second moments K-hat(x_i, x_j), component 0
  double target_var = 0.0; // t + K_t(0), truncated mode sum
  double mc_stderr = 0.0;  // std error of the diagonal estimate
  double max_diag_dev = 0.0;  // max_i |K-hat(i,i) - target_var|
};

CovarianceEstimate covariance_estimate(std::span<const Field> samples, double t, int kmax);

}  // namespace rough
