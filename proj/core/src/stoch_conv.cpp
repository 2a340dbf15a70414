#include "roughburgers/stoch_conv.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rough {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kCosStream = 2, kSinStream = 3, kZeroStream = 4;

// Cell increments as a node field (node i carries cell i, wrap at m).
Field increments_as_field(const NoiseIncrement& inc, const SpatialGrid& g) {
  Field f(g, inc.n);
  for (int i = 0; i < g.m; ++i)
    for (int c = 0; c < inc.n; ++c) f.at(i, c) = inc.at(i, c);
  f.close_periodic();
  return f;
}

// theta(t_l) acting on the increment field, node-wise matrix * vector.
Field apply_theta(const Field& theta, const Field& w) {
  const int n = w.dim();
  Field out(w.grid(), n);
  for (int i = 0; i <= w.grid().m; ++i)
    matvec_acc(theta.node(i), w.node(i), out.node(i), n);
  return out;
}

}  // namespace

GaussianField simulate_X(const NoiseSource& noise, SimMode mode) {
  const NoiseSpec& sp = noise.spec();
  const SpatialGrid g(sp.m);
  const int L = sp.steps();
  GaussianField X;
  X.field = SpaceTimeField(g, sp.n, sp.dt, L);
  X.lifts.resize(L + 1);

  if (mode == SimMode::coupled) {
    Field cur(g, sp.n);
    X.lifts[0] = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(cur));
    for (int l = 0; l < L; ++l) {
      const Field w = increments_as_field(noise.increments(l), g);
      cur += w;
      cur = semigroup_apply(sp.dt, cur);
      X.field.slices[l + 1] = cur;
      X.lifts[l + 1] = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(cur));
    }
    return X;
  }

  // spectral: exact OU recursion for real cos/sin modes k = 1..m/2-1 and the
  // k = 0 Brownian level; each slice synthesized on the grid.
  const int kmax = sp.m / 2 - 1;
  CounterRng rng(sp.seed);
  std::vector<double> a(kmax + 1, 0.0), b(kmax + 1, 0.0);  // per component below
  for (int comp = 0; comp < sp.n; ++comp) {
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    double a0 = 0.0;
    for (int l = 0; l < L; ++l) {
      a0 += std::sqrt(sp.dt) * rng.gaussian(kZeroStream, l, comp);
      for (int k = 1; k <= kmax; ++k) {
        const double w = 2.0 * kPi * k;
        const double decay = std::exp(-w * w * sp.dt);
        const double sd = std::sqrt((1.0 - decay * decay) / (2.0 * w * w));
        a[k] = decay * a[k] + sd * rng.gaussian(kCosStream, l, static_cast<std::uint64_t>(k) * sp.n + comp);
        b[k] = decay * b[k] + sd * rng.gaussian(kSinStream, l, static_cast<std::uint64_t>(k) * sp.n + comp);
      }
      Field& slice = X.field.slices[l + 1];
      for (int i = 0; i <= g.m; ++i) {
        const double x = g.point(i);
        double s = a0;
        for (int k = 1; k <= kmax; ++k) {
          const double ph = 2.0 * kPi * k * x;
          s += std::numbers::sqrt2 * (a[k] * std::cos(ph) + b[k] * std::sin(ph));
        }
        slice.at(i, comp) = s;
      }
    }
  }
  for (int l = 0; l <= L; ++l) {
    X.field.slices[l].close_periodic();
    X.lifts[l] = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(X.field.slices[l]));
  }
  return X;
}

namespace {

ControlledConvolution stoch_conv_impl(const SpaceTimeField& theta, const NoiseSource& noise,
                                      std::shared_ptr<const GaussianField> X,
                                      bool mollify_noise, double eps) {
  const NoiseSpec& sp = noise.spec();
  const SpatialGrid g(sp.m);
  const int L = sp.steps();
  if (theta.steps() < L || theta.grid() != g || theta.dim() != sp.n * sp.n)
    throw std::invalid_argument("stoch_conv: theta grid mismatch");
  if (X && (X->field.grid() != g || X->field.steps() != L))
    throw std::invalid_argument("stoch_conv: coupled X mismatch");

  ControlledConvolution out;
  out.psi = SpaceTimeField(g, sp.n, sp.dt, L);
  out.thetavals = theta;
  out.mollified = mollify_noise;
  out.eps = eps;
  out.underresolved_eps = mollify_noise && mollifier_underresolved(eps, g);
  out.coupled_x = std::move(X);

  Field cur(g, sp.n);
  for (int l = 0; l < L; ++l) {
    NoiseIncrement inc = noise.increments(l);
    if (mollify_noise) inc = mollify(inc, eps, g);
    const Field w = increments_as_field(inc, g);
    cur += apply_theta(theta.slices[l], w);
    cur = semigroup_apply(sp.dt, cur);
    out.psi.slices[l + 1] = cur;
  }
  return out;
}

}  // namespace

GaussianField simulate_X_mollified(const NoiseSource& noise, double eps) {
  const NoiseSpec& sp = noise.spec();
  const SpatialGrid g(sp.m);
  const int L = sp.steps();
  GaussianField X;
  X.field = SpaceTimeField(g, sp.n, sp.dt, L);
  X.lifts.resize(L + 1);
  Field cur(g, sp.n);
  X.lifts[0] = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(cur));
  for (int l = 0; l < L; ++l) {
    const Field w = increments_as_field(mollify(noise.increments(l), eps, g), g);
    cur += w;
    cur = semigroup_apply(sp.dt, cur);
    X.field.slices[l + 1] = cur;
    X.lifts[l + 1] = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(cur));
  }
  return X;
}

ControlledConvolution stoch_conv(const SpaceTimeField& theta, const NoiseSource& noise,
                                 std::shared_ptr<const GaussianField> X) {
  return stoch_conv_impl(theta, noise, std::move(X), false, 0.0);
}

ControlledConvolution stoch_conv(const SpaceTimeField& theta, const NoiseSource& noise) {
  auto X = std::make_shared<GaussianField>(simulate_X(noise, SimMode::coupled));
  return stoch_conv_impl(theta, noise, std::move(X), false, 0.0);
}

ControlledConvolution stoch_conv_mollified(const SpaceTimeField& theta,
                                           const NoiseSource& noise, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("stoch_conv_mollified: eps > 0 required");
  auto X = std::make_shared<GaussianField>(simulate_X_mollified(noise, eps));
  return stoch_conv_impl(theta, noise, std::move(X), true, eps);
}

ControlledConvolution stoch_conv_mollified(const SpaceTimeField& theta,
                                           const NoiseSource& noise, double eps,
                                           std::shared_ptr<const GaussianField> X_eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("stoch_conv_mollified: eps > 0 required");
  return stoch_conv_impl(theta, noise, std::move(X_eps), true, eps);
}

TwoPointField remainder(const Field& psi, const Field& theta_t, const Field& x_t) {
  const int n = psi.dim();
  if (theta_t.dim() != n * n || x_t.dim() != n || psi.grid() != x_t.grid() ||
      theta_t.grid() != psi.grid())
    throw std::invalid_argument("remainder: dimension mismatch");
  const int m = psi.grid().m;
  TwoPointField R(psi.grid(), n);
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) {
      auto out = R.pair(i, j);
      for (int a = 0; a < n; ++a) {
        double s = psi.at(j, a) - psi.at(i, a);
        for (int c = 0; c < n; ++c)
          s -= theta_t.at(i, a * n + c) * (x_t.at(j, c) - x_t.at(i, c));
        out[a] = s;
      }
    }
  return R;
}

TwoPointField ControlledConvolution::remainder_at(int l) const {
  if (!coupled_x) throw std::logic_error("remainder_at: no coupled X stored");
  return remainder(psi.slices.at(l), thetavals.slices.at(l), coupled_x->field.slices.at(l));
}

ControlledPath ControlledConvolution::controlled_slice(int l) const {
  if (!coupled_x) throw std::logic_error("controlled_slice: no coupled X stored");
  return ControlledPath(coupled_x->lifts.at(l), psi.slices.at(l), thetavals.slices.at(l));
}

double ControlledConvolution::remainder_norm(int l, double two_alpha) const {
  return controlled_slice(l).remainder_norm(two_alpha);
}
double ControlledConvolution::remainder_norm_dyadic(int l, double two_alpha) const {
  return controlled_slice(l).remainder_norm_dyadic(two_alpha);
}

StoppingMonitor::StoppingMonitor(MonitorThresholds k, double alpha, double dt)
    : k_(k), alpha_(alpha), dt_(dt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("StoppingMonitor: alpha in (0,1)");
  if (!(dt > 0.0)) throw std::invalid_argument("StoppingMonitor: dt > 0");
}

void StoppingMonitor::update(int l, const Field& x_slice, const RoughPath& lift,
                             const Field& psi_slice, const Field& theta_slice) {
  if (l != next_l_) throw std::invalid_argument("StoppingMonitor: slices out of order");
  ++next_l_;

  // parabolic ratio of X: space pairs within the slice + dyadic time lags
  sup_ratio_x_ = std::max(sup_ratio_x_, holder_seminorm_dyadic(x_slice, alpha_));
  const int n = x_slice.dim();
  for (int lag = 1; lag <= l; lag <<= 1) {
    const Field& old = xhist_[l - lag];
    const double w = 1.0 / std::pow(lag * dt_, alpha_ / 2.0);
    for (int i = 0; i <= x_slice.grid().m; ++i) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) {
        const double d = x_slice.at(i, c) - old.at(i, c);
        s += d * d;
      }
      sup_ratio_x_ = std::max(sup_ratio_x_, std::sqrt(s) * w);
    }
  }
  xhist_.push_back(x_slice);

  sup_x_ = std::max(sup_x_, sup_ratio_x_ + lift.two_level_norm_dyadic(2.0 * alpha_));
  sup_psi_ = std::max(sup_psi_, psi_slice.sup_norm() + holder_seminorm_dyadic(psi_slice, alpha_));

  double rem = remainder_dyadic(psi_slice, theta_slice, x_slice);
  sup_rem_ = std::max(sup_rem_, rem);

  if (!triggered_at_ &&
      (sup_x_ > k_.K1 || sup_psi_ > k_.K2 || sup_rem_ > k_.K3))
    triggered_at_ = l * dt_;
}

double StoppingMonitor::remainder_dyadic(const Field& psi, const Field& theta,
                                         const Field& x) const {
  const int m = psi.grid().m;
  const int n = psi.dim();
  const double h = psi.grid().h();
  double best = 0.0;
  for (int lag = 1; lag <= m; lag <<= 1) {
    const double w = 1.0 / std::pow(lag * h, 2.0 * alpha_);
    for (int i = 0; i + lag <= m; ++i) {
      const int j = i + lag;
      double s = 0.0;
      for (int a = 0; a < n; ++a) {
        double r = psi.at(j, a) - psi.at(i, a);
        for (int c = 0; c < n; ++c)
          r -= theta.at(i, a * n + c) * (x.at(j, c) - x.at(i, c));
        s += r * r;
      }
      best = std::max(best, std::sqrt(s) * w);
    }
  }
  return best;
}

Field spectral_slice(const NoiseSpec& spec, double t, int kmax) {
  spec.validate();
  if (!(t > 0.0)) throw std::invalid_argument("spectral_slice: t > 0");
  const SpatialGrid g(spec.m);
  CounterRng rng(spec.seed);
  Field out(g, spec.n);
  for (int comp = 0; comp < spec.n; ++comp) {
    const double a0 = std::sqrt(t) * rng.gaussian(kZeroStream, 0, comp);
    std::vector<double> ak(kmax + 1), bk(kmax + 1);
    for (int k = 1; k <= kmax; ++k) {
      const double w = 2.0 * kPi * k;
      const double sd = std::sqrt((1.0 - std::exp(-2.0 * w * w * t)) / (2.0 * w * w));
      ak[k] = sd * rng.gaussian(kCosStream, 0, static_cast<std::uint64_t>(k) * spec.n + comp);
      bk[k] = sd * rng.gaussian(kSinStream, 0, static_cast<std::uint64_t>(k) * spec.n + comp);
    }
    for (int i = 0; i <= g.m; ++i) {
      const double x = g.point(i);
      double s = a0;
      for (int k = 1; k <= kmax; ++k) {
        const double ph = 2.0 * kPi * k * x;
        s += std::numbers::sqrt2 * (ak[k] * std::cos(ph) + bk[k] * std::sin(ph));
      }
      out.at(i, comp) = s;
    }
  }
  out.close_periodic();
  return out;
}

std::vector<double> spectral_point_series(const NoiseSpec& spec, double x0, int kmax) {
  spec.validate();
  const int L = spec.steps();
  CounterRng rng(spec.seed);
  // combined mode c_k = sqrt2 (a_k cos + b_k sin) at x0 is itself an OU with
  // doubled variance, independent across k
  std::vector<double> state(kmax + 1, 0.0);
  std::vector<double> decay(kmax + 1), sd(kmax + 1);
  int k_split = kmax + 1;  // first k treated as memoryless
  double tail_var = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    const double w = 2.0 * kPi * k;
    decay[k] = std::exp(-w * w * spec.dt);
    const double var1 = (1.0 - decay[k] * decay[k]) / (2.0 * w * w);
    sd[k] = std::sqrt(2.0 * var1);
    if (decay[k] < 0x1.0p-52 && k_split > k) k_split = k;
  }
  for (int k = k_split; k <= kmax; ++k) {
    const double w = 2.0 * kPi * k;
    tail_var += 2.0 * (1.0 - decay[k] * decay[k]) / (2.0 * w * w);
  }
  const double tail_sd = std::sqrt(tail_var);

  // the law of t -> X(t, x0) is the same for every x0 (spatial stationarity);
  // the combined mode sqrt2 (a_k cos + b_k sin)(x0) is one OU with 2x variance
  (void)x0;
  std::vector<double> series(L + 1, 0.0);
  double a0 = 0.0;
  for (int l = 0; l < L; ++l) {
    a0 += std::sqrt(spec.dt) * rng.gaussian(kZeroStream, l, 0);
    double s = a0;
    for (int k = 1; k < k_split; ++k) {
      state[k] = decay[k] * state[k] + sd[k] * rng.gaussian(kCosStream, l, k);
      s += state[k];
    }
    if (tail_sd > 0.0) s += tail_sd * rng.gaussian(kSinStream, l, 0);
    series[l + 1] = s;
  }
  return series;
}

}  // namespace rough
