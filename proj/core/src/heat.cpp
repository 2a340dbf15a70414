#include "roughburgers/heat.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "roughburgers/fft.hpp"

namespace rough {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTail = 1e-16;

// Fold x into [0, 1/2] using periodicity and evenness.
double fold(double x, double& sign_dx) {
  double y = x - std::floor(x);
  sign_dx = 1.0;
  if (y > 0.5) {
    y = 1.0 - y;
    sign_dx = -1.0;
  }
  return y;
}

double gauss(double t, double x) {
  return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
}

}  // namespace

void HeatKernelConfig::validate() const {
  if (k_max < 64) throw std::invalid_argument("HeatKernelConfig: k_max >= 64");
  if (image_max < 3) throw std::invalid_argument("HeatKernelConfig: image_max >= 3");
  if (!(t_switch > 0.0)) throw std::invalid_argument("HeatKernelConfig: t_switch > 0");
}

HeatKernel::HeatKernel(HeatKernelConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double HeatKernel::value_fourier(double t, double x) const {
  double s = 1.0;
  for (int k = 1; k <= cfg_.k_max; ++k) {
    const double a = 2.0 * std::exp(-(2.0 * kPi * k) * (2.0 * kPi * k) * t);
    if (a < kTail) break;
    s += a * std::cos(2.0 * kPi * k * x);
  }
  return s;
}

double HeatKernel::value_reflection(double t, double x) const {
  double sgn;
  const double y = fold(x, sgn);
  double s = gauss(t, y);
  for (int k = 1; k <= cfg_.image_max; ++k) {
    const double a = gauss(t, y - k) + gauss(t, y + k);
    s += a;
    if (a < kTail) break;
  }
  return s;
}

double HeatKernel::dx_fourier(double t, double x) const {
  double s = 0.0;
  for (int k = 1; k <= cfg_.k_max; ++k) {
    const double w = 2.0 * kPi * k;
    const double a = 2.0 * w * std::exp(-w * w * t);
    if (a < kTail) break;
    s -= a * std::sin(w * x);
  }
  return s;
}

double HeatKernel::dx_reflection(double t, double x) const {
  double sgn;
  const double y = fold(x, sgn);
  double s = 0.0;
  for (int k = -cfg_.image_max; k <= cfg_.image_max; ++k) {
    const double z = y - k;
    s += -z / (2.0 * t) * gauss(t, z);
  }
  return sgn * s;
}

double HeatKernel::value(double t, double x) const {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t > 0 required");
  return (t < cfg_.t_switch) ? value_reflection(t, x) : value_fourier(t, x);
}

double HeatKernel::dx(double t, double x) const {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel dx: t > 0 required");
  return (t < cfg_.t_switch) ? dx_reflection(t, x) : dx_fourier(t, x);
}

Field semigroup_apply(double t, const Field& f) {
  if (t < 0.0) throw std::invalid_argument("semigroup_apply: t >= 0 required");
  if (t == 0.0) return f;
  const int m = f.grid().m;
  const int n = f.dim();
  Field out(f.grid(), n);
  std::vector<double> comp(m);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < m; ++i) comp[i] = f.at(i, c);
    auto spec = dft_real(comp);
    for (int k = 0; k < m; ++k) {
      const double w = 2.0 * kPi * signed_freq(k, m);
      spec[k] *= std::exp(-w * w * t);
    }
    auto back = idft_real(spec);
    for (int i = 0; i < m; ++i) out.at(i, c) = back[i];
  }
  out.close_periodic();
  return out;
}

Field spectral_derivative(const Field& f) {
  const int m = f.grid().m;
  const int n = f.dim();
  Field out(f.grid(), n);
  std::vector<double> comp(m);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < m; ++i) comp[i] = f.at(i, c);
    auto spec = dft_real(comp);
    for (int k = 0; k < m; ++k) {
      const int kk = signed_freq(k, m);
      if (2 * k == m) {
        spec[k] = 0.0;  // Nyquist
      } else {
        spec[k] *= std::complex<double>(0.0, 2.0 * kPi * kk);
      }
    }
    auto back = idft_real(spec);
    for (int i = 0; i < m; ++i) out.at(i, c) = back[i];
  }
  out.close_periodic();
  return out;
}

ScalingSplit kernel_scaling_split(double t, const HeatKernel& hk, int samples) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("kernel_scaling_split: t in (0,1] required");
  ScalingSplit out;
  const double rt = std::sqrt(t);
  const double umax = 0.5 / rt;
  const int N = samples;
  out.u.resize(N + 1);
  out.f.resize(N + 1);
  out.g.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double u = -umax + 2.0 * umax * i / N;
    out.u[i] = u;
    out.f[i] = rt * hk.value(t, rt * u);
    out.g[i] = t * hk.dx(t, rt * u);
  }
  // |.|_{1,1}: sum over unit windows of sup(|f|) + sup(|f'|), with f' taken
  // from the sampled neighbours.
  auto window_norm = [&](const std::vector<double>& v) {
    const double du = 2.0 * umax / N;
    const int k_lo = static_cast<int>(std::floor(-umax));
    const int k_hi = static_cast<int>(std::ceil(umax));
    double total = 0.0;
    for (int k = k_lo; k < k_hi; ++k) {
      double sup_v = 0.0, sup_d = 0.0;
      for (int i = 0; i <= N; ++i) {
        if (out.u[i] < k || out.u[i] > k + 1) continue;
        sup_v = std::max(sup_v, std::fabs(v[i]));
        if (i > 0) sup_d = std::max(sup_d, std::fabs(v[i] - v[i - 1]) / du);
      }
      total += sup_v + sup_d;
    }
    return total;
  };
  out.f11 = window_norm(out.f);
  out.g11 = window_norm(out.g);
  return out;
}

namespace {

// int_0^1 p_a(x-z) p_b(y-z) dz = p_{a+b}(x-y)  (Chapman-Kolmogorov).
double sq_diff_z_integral(const HeatKernel& hk, double tau, double d) {
  // int (p_tau(. ) - p_tau(. - d))^2 = 2 [p_{2 tau}(0) - p_{2 tau}(d)]
  return 2.0 * (hk.value(2.0 * tau, 0.0) - hk.value(2.0 * tau, d));
}

double periodic_dist(double a) {
  double y = a - std::floor(a);
  return std::min(y, 1.0 - y);
}

}  // namespace

BoundCheckReport kernel_bound_check(KernelBound id, double alpha,
                                    std::span<const double> scales, double t,
                                    const HeatKernel& hk, int time_nodes,
                                    int z_nodes) {
  if ((id == KernelBound::I1 || id == KernelBound::I2) &&
      !(alpha > 1.0 / 3.0 && alpha < 0.5))
    throw std::invalid_argument("kernel_bound_check: alpha in (1/3,1/2) for I1/I2");

  BoundCheckReport rep;
  rep.id = id;
  switch (id) {
    case KernelBound::SR1: rep.expected_exponent = 1.0; break;
    case KernelBound::TR: rep.expected_exponent = 0.5; break;
    case KernelBound::I1:
    case KernelBound::I2: rep.expected_exponent = 1.0 + 2.0 * alpha; break;
  }

  const int J = time_nodes;
  // int_0^t F(tau) dtau with tau = t sigma^2 graded nodes (midpoint in sigma).
  auto graded_time_integral = [&](double upto, auto&& F) {
    double s = 0.0;
    const double dsig = 1.0 / J;
    for (int q = 0; q < J; ++q) {
      const double sig = (q + 0.5) * dsig;
      const double tau = upto * sig * sig;
      s += F(tau) * 2.0 * upto * sig * dsig;
    }
    return s;
  };

  auto lhs_for_scale = [&](double scale) -> double {
    switch (id) {
      case KernelBound::SR1:
        return graded_time_integral(t, [&](double tau) {
          return sq_diff_z_integral(hk, tau, scale);
        });
      case KernelBound::TR: {
        // scale = t - s; base interval [0, s] with s = t - scale
        const double s0 = t - scale;
        if (s0 <= 0.0) throw std::invalid_argument("kernel_bound_check TR: need t-s < t");
        // second piece: int_s^t int p_{t-tau}^2 dz dtau = int_0^{scale} p_{2u}(0) du
        double piece2 = graded_time_integral(scale, [&](double u) {
          return hk.value(2.0 * u, 0.0);
        });
        // first piece: int_0^s int (p_{t-tau} - p_{s-tau})^2 dz dtau; with
        // u = s - tau: int_0^{s} [p_{2(u+scale)}(0) - 2 p_{2u+scale}(0) + p_{2u}(0)] du
        double piece1 = graded_time_integral(s0, [&](double u) {
          return hk.value(2.0 * (u + scale), 0.0) - 2.0 * hk.value(2.0 * u + scale, 0.0) +
                 hk.value(2.0 * u, 0.0);
        });
        return piece1 + piece2;
      }
      case KernelBound::I1:
        return graded_time_integral(t, [&](double tau) {
          return sq_diff_z_integral(hk, tau, scale) * std::pow(tau, alpha);
        });
      case KernelBound::I2: {
        // int_0^t int (p_tau(y-z) - p_tau(x-z))^2 dist(x,z)^{2 alpha} dz dtau
        // with x = 0, y = scale.
        const int Z = z_nodes;
        const double hz = 1.0 / Z;
        return graded_time_integral(t, [&](double tau) {
          double acc = 0.0;
          for (int iz = 0; iz < Z; ++iz) {
            const double z = (iz + 0.5) * hz;
            const double d = hk.value(tau, scale - z) - hk.value(tau, -z);
            acc += d * d * std::pow(periodic_dist(z), 2.0 * alpha) * hz;
          }
          return acc;
        });
      }
    }
    return 0.0;
  };

  std::vector<double> xs, ys;
  for (double sc : scales) {
    BoundCheckRow row;
    row.scale = sc;
    row.lhs = (sc == 0.0) ? 0.0 : lhs_for_scale(sc);
    row.rhs = std::pow(sc, rep.expected_exponent);
    row.ratio = (row.rhs > 0.0) ? row.lhs / row.rhs : 0.0;
    rep.worst_ratio = std::max(rep.worst_ratio, row.ratio);
    rep.rows.push_back(row);
    if (sc > 0.0 && row.lhs > 0.0) {
      xs.push_back(sc);
      ys.push_back(row.lhs);
    }
  }
  rep.fit = fit_loglog(xs, ys);
  return rep;
}

}  // namespace rough
