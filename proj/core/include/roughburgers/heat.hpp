#pragma once

#include <span>
#include <vector>

#include "roughburgers/grid.hpp"

namespace rough {

struct HeatKernelConfig {
  int k_max = 256;      // Fourier mode cutoff
  int image_max = 16;   // reflection image cutoff
  double t_switch = 1.0 / (4.0 * 9.869604401089358);  // 1/(2 pi)^2

  void validate() const;
};

// Periodic heat kernel on [0,1], kept in both representations: the image sum
// sum_k p_t(x - k) of the Gaussian kernel for small t, the cosine series
// 1 + 2 sum_k e^{-(2 pi k)^2 t} cos(2 pi k x) for large t. Terms are added
// until they drop below 1e-16, capped by the config cutoffs.
class HeatKernel {
 public:
  explicit HeatKernel(HeatKernelConfig cfg = {});

  double value(double t, double x) const;   // t > 0
  double dx(double t, double x) const;      // analytic d/dx

  double value_fourier(double t, double x) const;
  double value_reflection(double t, double x) const;
  double dx_fourier(double t, double x) const;
  double dx_reflection(double t, double x) const;

  const HeatKernelConfig& config() const { return cfg_; }

 private:
  HeatKernelConfig cfg_;
};

// Spectral action of e^{t Laplacian} on a periodic field; t = 0 is the
// identity (bit-exact). Mean is preserved; modes decay by e^{-(2 pi k)^2 t}.
Field semigroup_apply(double t, const Field& f);

// Spectral spatial derivative (Nyquist mode dropped).
Field spectral_derivative(const Field& f);

// Scaled profiles f_t, g_t with p_t(x) = t^{-1/2} f_t(x/sqrt t) and
// d/dx p_t(x) = t^{-1} g_t(x/sqrt t), sampled on u in [-u_max, u_max],
// plus their |.|_{1,1} window sums.
struct ScalingSplit {
  std::vector<double> u;
  std::vector<double> f, g;
  double f11 = 0.0, g11 = 0.0;
};
ScalingSplit kernel_scaling_split(double t, const HeatKernel& hk, int samples = 4096);

enum class KernelBound { SR1, TR, I1, I2 };

struct BoundCheckRow {
  double scale = 0.0;  // |x-y| or (t-s)
  double lhs = 0.0;
  double rhs = 0.0;    // scale^expected_exponent
  double ratio = 0.0;
};
struct BoundCheckReport {
  KernelBound id{};
  double expected_exponent = 0.0;
  std::vector<BoundCheckRow> rows;
  double worst_ratio = 0.0;
  ExponentFit fit;
};

// Evaluates the kernel-integral bounds over a ladder of scales at base time
// t and fits the exponent. SR1/TR/I1 use the closed-form space integrals
// (Chapman-Kolmogorov); I2 quadratures over z. Time integrals run on
// sigma-graded nodes (tau = sigma^2) against the (t-s)^{-1/2} singularity.
BoundCheckReport kernel_bound_check(KernelBound id, double alpha,
                                    std::span<const double> scales, double t,
                                    const HeatKernel& hk, int time_nodes = 600,
                                    int z_nodes = 8192);

}  // namespace rough
