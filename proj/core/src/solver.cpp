#include "roughburgers/solver.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "roughburgers/fft.hpp"

namespace rough {

namespace {

constexpr std::uint64_t kU0Stream = 5;

}  // namespace

MatrixFn builtin_g(const std::string& name, int n) {
  MatrixFn f;
  f.n = n;
  f.name = name;
  const size_t nn = static_cast<size_t>(n) * n;
  const size_t nnn = nn * n;
  if (name == "zero") {
    f.zero = true;
    f.value = [nn](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < nn; ++i) out[i] = 0.0;
    };
    f.deriv = [nnn](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < nnn; ++i) out[i] = 0.0;
    };
    f.deriv2 = f.deriv;
    return f;
  }
  if (name == "linear") {
    if (n != 1) throw std::invalid_argument("builtin_g linear: n == 1 only");
    f.value = [](std::span<const double> u, std::span<double> out) { out[0] = u[0]; };
    f.deriv = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    f.deriv2 = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    return f;
  }
  if (name == "sin") {
    if (n != 1) throw std::invalid_argument("builtin_g sin: n == 1 only");
    f.value = [](std::span<const double> u, std::span<double> out) { out[0] = std::sin(u[0]); };
    f.deriv = [](std::span<const double> u, std::span<double> out) { out[0] = std::cos(u[0]); };
    f.deriv2 = [](std::span<const double> u, std::span<double> out) { out[0] = -std::sin(u[0]); };
    return f;
  }
  if (name == "pure_area") {
    if (n != 2) throw std::invalid_argument("builtin_g pure_area: n == 2 only");
    // rows both (u2, -u1)
    f.value = [](std::span<const double> u, std::span<double> out) {
      out[0] = u[1]; out[1] = -u[0];
      out[2] = u[1]; out[3] = -u[0];
    };
    f.deriv = [](std::span<const double>, std::span<double> out) {
      // [a][b][e]: g_a0 = u1 -> d/du1 = 1 at e=1; g_a1 = -u0 -> d/du0 = -1
      for (int i = 0; i < 8; ++i) out[i] = 0.0;
      out[0 * 4 + 0 * 2 + 1] = 1.0;   // a=0,b=0,e=1
      out[0 * 4 + 1 * 2 + 0] = -1.0;  // a=0,b=1,e=0
      out[1 * 4 + 0 * 2 + 1] = 1.0;
      out[1 * 4 + 1 * 2 + 0] = -1.0;
    };
    f.deriv2 = [](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < 16; ++i) out[i] = 0.0;
    };
    return f;
  }
  throw std::invalid_argument("builtin_g: unknown name " + name);
}

MatrixFn builtin_theta(const std::string& name, int n) {
  MatrixFn f;
  f.n = n;
  f.name = name;
  const size_t nn = static_cast<size_t>(n) * n;
  const size_t nnn = nn * n;
  if (name == "zero") {
    f.zero = true;
    f.value = [nn](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < nn; ++i) out[i] = 0.0;
    };
    f.deriv = [nnn](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < nnn; ++i) out[i] = 0.0;
    };
    return f;
  }
  if (name == "identity" || (name == "one" && n == 1)) {
    f.identity = true;
    f.value = [n, nn](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < nn; ++i) out[i] = 0.0;
      for (int i = 0; i < n; ++i) out[static_cast<size_t>(i) * n + i] = 1.0;
    };
    f.deriv = [nnn](std::span<const double>, std::span<double> out) {
      for (size_t i = 0; i < nnn; ++i) out[i] = 0.0;
    };
    return f;
  }
  if (name == "inv_sqrt") {
    if (n != 1) throw std::invalid_argument("builtin_theta inv_sqrt: n == 1 only");
    f.value = [](std::span<const double> u, std::span<double> out) {
      out[0] = 1.0 / std::sqrt(1.0 + u[0] * u[0]);
    };
    f.deriv = [](std::span<const double> u, std::span<double> out) {
      out[0] = -u[0] * std::pow(1.0 + u[0] * u[0], -1.5);
    };
    return f;
  }
  throw std::invalid_argument("builtin_theta: unknown name " + name);
}

void SolverConfig::validate() const {
  if (n < 1) throw std::invalid_argument("SolverConfig: n >= 1");
  if (!(alpha > 1.0 / 3.0 && alpha < beta && beta < 0.5))
    throw std::invalid_argument("SolverConfig: need 1/3 < alpha < beta < 1/2");
  if (m < 2 || !(dt > 0.0) || !(T > 0.0))
    throw std::invalid_argument("SolverConfig: bad discretization");
  if (!(K1 > 0.0 && K2 > 0.0 && K3 > 0.0 && K4 > 0.0))
    throw std::invalid_argument("SolverConfig: thresholds must be positive");
  if (u0.dim() != n || u0.grid().m != m)
    throw std::invalid_argument("SolverConfig: u0 shape mismatch");
  if (!g.value || !theta.value) throw std::invalid_argument("SolverConfig: missing g or theta");
  if (std::llround(T / dt) < 1) throw std::invalid_argument("SolverConfig: T < dt");
}

double cutoff_chi(double x, double K) {
  if (!(K > 0.0)) throw std::invalid_argument("cutoff_chi: K > 0 required");
  if (x <= K) return 1.0;
  const double s = K / x;
  return s * (2.0 - s);
}

Field sample_beta_holder(SpatialGrid g, int n, double beta, std::uint64_t seed,
                         double amplitude) {
  CounterRng rng(seed);
  Field f(g, n);
  const int kmax = g.m / 2 - 1;
  for (int c = 0; c < n; ++c) {
    std::vector<double> a(kmax + 1), b(kmax + 1);
    for (int k = 1; k <= kmax; ++k) {
      const double sd = std::pow(2.0 * std::numbers::pi * k, -(beta + 0.5));
      a[k] = sd * rng.gaussian(kU0Stream, 2 * k, c);
      b[k] = sd * rng.gaussian(kU0Stream, 2 * k + 1, c);
    }
    for (int i = 0; i < g.m; ++i) {
      const double x = g.point(i);
      double s = 0.0;
      for (int k = 1; k <= kmax; ++k) {
        const double ph = 2.0 * std::numbers::pi * k * x;
        s += std::numbers::sqrt2 * (a[k] * std::cos(ph) + b[k] * std::sin(ph));
      }
      f.at(i, c) = amplitude * s;
    }
  }
  f.close_periodic();
  return f;
}

InnerSolver::InnerSolver(const SolverConfig& cfg, const SpaceTimeField& U,
                         const SpaceTimeField& dU, const ControlledConvolution* psi)
    : cfg_(cfg), U_(U), dU_(dU), psi_(psi), L_(U.steps()) {
  if (psi_ && !psi_->coupled_x)
    throw std::invalid_argument("InnerSolver: psi lacks its controlled decomposition");
}

InnerState InnerSolver::zero_state() const {
  InnerState s;
  s.v = SpaceTimeField(U_.grid(), cfg_.n, U_.dt, L_);
  s.dv = SpaceTimeField(U_.grid(), cfg_.n, U_.dt, L_);
  return s;
}

// Compensated rough increments of int p_dt(. - y) g(u) d_y Psi over the
// cells, divided by h so the spectral semigroup acts on a density.
Field InnerSolver::rough_increment_cells(int l, const Field& u_l) const {
  const int n = cfg_.n;
  const SpatialGrid& g = U_.grid();
  const int m = g.m;
  const double h = g.h();
  Field A(g, n);
  const Field& psi_l = psi_->psi.slices[l];
  const Field& th_l = psi_->thetavals.slices[l];
  const RoughPath& lift = psi_->coupled_x->lift(l);
  const bool shift = !cfg_.area_modifier.is_zero() && cfg_.area_modifier.rows() == n;

  std::vector<double> gval(static_cast<size_t>(n) * n);
  std::vector<double> dg(static_cast<size_t>(n) * n * n);
  std::vector<double> xx(static_cast<size_t>(n) * n);
  for (int i = 0; i < m; ++i) {
    cfg_.g.value(u_l.node(i), gval);
    cfg_.g.deriv(u_l.node(i), dg);
    auto cell = lift.cell(i);
    for (int e = 0; e < n * n; ++e) xx[e] = cell[e];
    if (shift)
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) xx[static_cast<size_t>(r) * n + c] += h * cfg_.area_modifier(r, c);
    auto th = th_l.node(i);
    auto out = A.node(i);
    for (int a = 0; a < n; ++a) {
      double acc = 0.0;
      for (int b = 0; b < n; ++b) {
        acc += gval[static_cast<size_t>(a) * n + b] * (psi_l.at(i + 1, b) - psi_l.at(i, b));
        // W'_{ab,c} = sum_e dg[a][b][e] th[e][c]; term W' XX Z'^T with Z' = th
        for (int c = 0; c < n; ++c) {
          double wp = 0.0;
          for (int e = 0; e < n; ++e)
            wp += dg[(static_cast<size_t>(a) * n + b) * n + e] * th[static_cast<size_t>(e) * n + c];
          for (int d = 0; d < n; ++d)
            acc += wp * xx[static_cast<size_t>(c) * n + d] * th[static_cast<size_t>(b) * n + d];
        }
      }
      out[a] = acc / h;
    }
  }
  A.close_periodic();
  return A;
}

InnerState InnerSolver::apply(const InnerState& vin) const {
  const int n = cfg_.n;
  const SpatialGrid& g = U_.grid();
  const int m = g.m;
  const double dt = U_.dt;
  InnerState out = zero_state();
  const bool react_area = !cfg_.reaction_area.is_zero() && cfg_.reaction_area.rows() == n;

  Field G(g, n);
  std::vector<double> gval(static_cast<size_t>(n) * n);
  std::vector<double> dg(static_cast<size_t>(n) * n * n);
  std::vector<double> th(static_cast<size_t>(n) * n);
  std::vector<double> mta(static_cast<size_t>(n) * n);
  for (int l = 0; l < L_; ++l) {
    Field u_l = U_.slices[l];
    if (psi_) u_l += psi_->psi.slices[l];
    u_l += vin.v.slices[l];

    Field f_l(g, n);
    double grad[8];
    if (n > 8) throw std::invalid_argument("InnerSolver: n <= 8 supported");
    for (int i = 0; i <= m; ++i) {
      cfg_.g.value(u_l.node(i), gval);
      for (int c = 0; c < n; ++c)
        grad[c] = vin.dv.slices[l].at(i, c) + dU_.slices[l].at(i, c);
      auto out_i = f_l.node(i);
      matvec_acc(gval, {grad, static_cast<size_t>(n)}, out_i, n);
      if (react_area) {
        // explicit correction forcing: f_a = sum_{e,b} dg[a][b][e] (th a th^T)_{eb}
        cfg_.g.deriv(u_l.node(i), dg);
        cfg_.theta.value(u_l.node(i), th);
        for (int e = 0; e < n; ++e)
          for (int b = 0; b < n; ++b) {
            double s = 0.0;
            for (int c = 0; c < n; ++c)
              for (int d = 0; d < n; ++d)
                s += th[static_cast<size_t>(e) * n + c] * cfg_.reaction_area(c, d) *
                     th[static_cast<size_t>(b) * n + d];
            mta[static_cast<size_t>(e) * n + b] = s;
          }
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int b = 0; b < n; ++b)
            for (int e = 0; e < n; ++e)
              s += dg[(static_cast<size_t>(a) * n + b) * n + e] * mta[static_cast<size_t>(e) * n + b];
          out_i[a] += s;
        }
      }
    }
    if (psi_) f_l += rough_increment_cells(l, u_l);

    f_l *= dt;
    G += f_l;
    G = semigroup_apply(dt, G);
    out.v.slices[l + 1] = G;
    out.dv.slices[l + 1] = spectral_derivative(G);
  }
  return out;
}

InnerState InnerSolver::fixed_point(std::vector<double>* residual_history) const {
  InnerState v = zero_state();
  std::vector<double> hist;
  const double K5 = cfg_.k5();
  for (int it = 0; it < cfg_.inner_max_iters; ++it) {
    InnerState next = apply(v);
    double resid = 0.0, c1 = 0.0;
    for (int l = 0; l <= L_; ++l) {
      Field d = next.v.slices[l] - v.v.slices[l];
      Field dd = next.dv.slices[l] - v.dv.slices[l];
      resid = std::max(resid, d.sup_norm() + dd.sup_norm());
      c1 = std::max(c1, next.v.slices[l].sup_norm() + next.dv.slices[l].sup_norm());
    }
    hist.push_back(resid);
    v = std::move(next);
    if (c1 > K5) {
      if (residual_history) *residual_history = hist;
      throw InnerDivergence(hist);
    }
    if (resid <= cfg_.inner_tol) {
      if (residual_history) *residual_history = hist;
      return v;
    }
  }
  if (residual_history) *residual_history = hist;
  throw InnerDivergence(hist);
}

namespace {

SpaceTimeField heat_flow(const SolverConfig& cfg, const Field& u0, int L) {
  SpaceTimeField U(u0.grid(), cfg.n, cfg.dt, L);
  U.slices[0] = u0;
  for (int l = 1; l <= L; ++l) U.slices[l] = semigroup_apply(l * cfg.dt, u0);
  return U;
}

SpaceTimeField derivative_flow(const SpaceTimeField& U) {
  SpaceTimeField dU(U.grid(), U.dim(), U.dt, U.steps());
  for (int l = 0; l <= U.steps(); ++l) dU.slices[l] = spectral_derivative(U.slices[l]);
  return dU;
}

SpaceTimeField evaluate_theta(const MatrixFn& theta, const SpaceTimeField& u) {
  SpaceTimeField th(u.grid(), u.dim() * u.dim(), u.dt, u.steps());
  for (int l = 0; l <= u.steps(); ++l) {
    for (int i = 0; i <= u.grid().m; ++i)
      theta.value(u.slices[l].node(i), th.slices[l].node(i));
  }
  return th;
}

// Controlled norm per slice (dyadic estimators) for the K2 cutoff.
double controlled_norm_dyadic(const ControlledConvolution& psi, int l, double alpha) {
  const Field& p = psi.psi.slices[l];
  const Field& t = psi.thetavals.slices[l];
  double norm = p.sup_norm() + holder_seminorm_dyadic(p, alpha);
  norm += t.sup_norm() + holder_seminorm_dyadic(t, alpha);
  norm += psi.remainder_norm_dyadic(l, 2.0 * alpha);
  return norm;
}

MonitorReport run_monitor(const SolverConfig& cfg, const GaussianField& X,
                          const ControlledConvolution& psi) {
  StoppingMonitor mon({cfg.K1, cfg.K2, cfg.K3}, cfg.alpha, cfg.dt);
  for (int l = 0; l <= X.field.steps(); ++l)
    mon.update(l, X.field.slices[l], X.lift(l), psi.psi.slices[l], psi.thetavals.slices[l]);
  MonitorReport rep;
  rep.triggered = mon.triggered();
  rep.triggered_at = mon.triggered_at();
  rep.sup_x = mon.sup_x_parabolic();
  rep.sup_psi = mon.sup_psi_alpha();
  rep.sup_remainder = mon.sup_remainder();
  return rep;
}

SpaceTimeField difference(const SpaceTimeField& a, const SpaceTimeField& b) {
  SpaceTimeField d = a;
  for (size_t l = 0; l < d.slices.size(); ++l) d.slices[l] -= b.slices[l];
  return d;
}

}  // namespace

SolutionBundle outer_picard(const SolverConfig& cfg, const NoiseSource& noise) {
  cfg.validate();
  const SpatialGrid g(cfg.m);
  const int L = noise.spec().steps();
  if (noise.spec().m != cfg.m || noise.spec().n != cfg.n)
    throw std::invalid_argument("outer_picard: noise/config mismatch");

  SolutionBundle b;
  b.cfg = cfg;
  b.U = heat_flow(cfg, cfg.u0, L);
  const SpaceTimeField dU = derivative_flow(b.U);

  if (cfg.theta.zero) {
    // deterministic path: no stochastic machinery at all
    InnerSolver inner(cfg, b.U, dU, nullptr);
    std::vector<double> hist;
    b.v = inner.fixed_point(&hist);
    b.inner_histories.push_back(hist);
    b.u = b.U;
    for (int l = 0; l <= L; ++l) b.u.slices[l] += b.v.v.slices[l];
    b.outer_iterations = 1;
    b.noise_draws = noise.draws();
    b.has_noise = false;
    return b;
  }

  auto X = std::make_shared<GaussianField>(cfg.eps > 0.0
                                               ? simulate_X_mollified(noise, cfg.eps)
                                               : simulate_X(noise, SimMode::coupled));

  SpaceTimeField u_prev = b.U;  // first iterate: theta(U)
  ControlledConvolution psi_cut;
  ControlledConvolution psi_raw;
  InnerState v;
  std::vector<double> outer_resid;
  bool converged = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    SpaceTimeField theta_field = evaluate_theta(cfg.theta, u_prev);
    psi_raw = cfg.eps > 0.0 ? stoch_conv_mollified(theta_field, noise, cfg.eps, X)
                            : stoch_conv(theta_field, noise, X);
    psi_cut = psi_raw;
    for (int l = 0; l <= L; ++l) {
      const double c = cutoff_chi(controlled_norm_dyadic(psi_raw, l, cfg.alpha), cfg.K2);
      if (c != 1.0) {
        psi_cut.psi.slices[l] *= c;
        psi_cut.thetavals.slices[l] *= c;
      }
    }
    InnerSolver inner(cfg, b.U, dU, &psi_cut);
    std::vector<double> hist;
    v = inner.fixed_point(&hist);
    b.inner_histories.push_back(hist);

    SpaceTimeField u_new = b.U;
    for (int l = 0; l <= L; ++l) {
      u_new.slices[l] += psi_cut.psi.slices[l];
      u_new.slices[l] += v.v.slices[l];
    }
    const double diff = parabolic_holder_dyadic(difference(u_new, u_prev), cfg.alpha);
    outer_resid.push_back(diff);
    u_prev = std::move(u_new);
    if (diff <= cfg.picard_tol) {
      converged = true;
      b.outer_iterations = it + 1;
      break;
    }
  }
  if (!converged) throw OuterDivergence(outer_resid);

  b.u = u_prev;
  b.psi = psi_cut;
  b.v = v;
  b.X = X;
  b.outer_residuals = outer_resid;
  b.noise_draws = noise.draws();
  b.has_noise = true;
  b.monitor = run_monitor(cfg, *X, psi_raw);
  if (b.monitor.triggered) {
    const int lstar = static_cast<int>(std::llround(b.monitor.triggered_at / cfg.dt));
    const int keep = std::max(1, lstar);
    auto truncate = [&](SpaceTimeField& f) {
      f.slices.resize(keep + 1);
    };
    truncate(b.u);
    truncate(b.U);
    truncate(b.v.v);
    truncate(b.v.dv);
    truncate(b.psi.psi);
    truncate(b.psi.thetavals);
  }
  return b;
}

namespace {

// Appends src (skipping its slice 0, which duplicates dst's terminal slice).
void append(SpaceTimeField& dst, const SpaceTimeField& src) {
  for (int l = 1; l <= src.steps(); ++l) dst.slices.push_back(src.slices[l]);
}

SolutionBundle solve_impl(const SolverConfig& cfg, int force_chunks, bool mollified) {
  SolverConfig base = cfg;
  if (mollified && !(cfg.eps > 0.0))
    throw std::invalid_argument("solve_mollified: eps > 0 required");
  if (!mollified) base.eps = 0.0;
  base.validate();

  const int L_total = base.steps();
  auto noise = std::make_shared<GeneratorNoise>(base.noise_spec());

  int chunks = force_chunks > 0 ? force_chunks : 1;
  chunks = std::max(chunks, (L_total + 4095) / 4096);  // retained-slice cap
  const int max_chunks = 64;

  while (true) {
    if (L_total % chunks != 0) {
      // grow until the partition divides the step count
      bool found = false;
      for (int c = chunks; c <= L_total; ++c)
        if (L_total % c == 0) { chunks = c; found = true; break; }
      if (!found) chunks = L_total;
    }
    const int Lc = L_total / chunks;
    try {
      SolutionBundle global;
      Field u0 = base.u0;
      for (int c = 0; c < chunks; ++c) {
        SolverConfig sub = base;
        sub.u0 = u0;
        sub.T = Lc * base.dt;
        WindowedNoise wn(*noise, c * Lc, Lc);
        SolutionBundle part = outer_picard(sub, wn);
        if (c == 0) {
          global = std::move(part);
        } else {
          append(global.u, part.u);
          append(global.U, part.U);
          append(global.v.v, part.v.v);
          append(global.v.dv, part.v.dv);
          if (part.has_noise) {
            append(global.psi.psi, part.psi.psi);
            append(global.psi.thetavals, part.psi.thetavals);
          }
          global.outer_iterations += part.outer_iterations;
          for (auto& h : part.inner_histories) global.inner_histories.push_back(h);
          global.monitor.sup_x = std::max(global.monitor.sup_x, part.monitor.sup_x);
          global.monitor.sup_psi = std::max(global.monitor.sup_psi, part.monitor.sup_psi);
          global.monitor.sup_remainder =
              std::max(global.monitor.sup_remainder, part.monitor.sup_remainder);
          if (part.monitor.triggered && !global.monitor.triggered) {
            global.monitor.triggered = true;
            global.monitor.triggered_at = c * Lc * base.dt + part.monitor.triggered_at;
          }
          global.X = part.X;  // reference field of the last chunk
        }
        if (part.monitor.triggered) break;
        u0 = global.u.slices.back();
      }
      global.cfg = cfg;
      global.chunks = chunks;
      global.noise_draws = noise->draws();
      return global;
    } catch (const InnerDivergence&) {
      if (chunks >= max_chunks || chunks >= L_total) throw;
      chunks *= 2;
    } catch (const OuterDivergence&) {
      if (chunks >= max_chunks || chunks >= L_total) throw;
      chunks *= 2;
    }
  }
}

}  // namespace

SolutionBundle solve(const SolverConfig& cfg, int force_chunks) {
  return solve_impl(cfg, force_chunks, cfg.eps > 0.0);
}

SolutionBundle solve_mollified(const SolverConfig& cfg, int force_chunks) {
  return solve_impl(cfg, force_chunks, true);
}

WeakFormResidual weak_form_residual(const SolutionBundle& b, std::span<const TestFn> testfns) {
  const SolverConfig& cfg = b.cfg;
  const SpatialGrid g(cfg.m);
  const int n = cfg.n;
  const int L = b.u.steps();
  const double h = g.h();
  const double dt = b.u.dt;
  if (b.has_noise && !b.X) throw std::invalid_argument("weak_form_residual: missing stored noise");

  GeneratorNoise noise(cfg.noise_spec());

  WeakFormResidual out;
  for (const TestFn& tf : testfns) {
    std::vector<double> phi(g.m + 1), dphi2(g.m + 1);
    for (int i = 0; i <= g.m; ++i) {
      phi[i] = tf.phi(g.point(i));
      dphi2[i] = tf.d2phi(g.point(i));
    }
    auto inner_product = [&](std::span<const double> w, const Field& f, int comp) {
      double s = 0.0;
      for (int i = 0; i < g.m; ++i) s += w[i] * f.at(i, comp) * h;
      return s;
    };

    std::vector<double> defect(n, 0.0), scale_terms(n, 0.0);
    for (int a = 0; a < n; ++a) {
      const double t_final = inner_product(phi, b.u.slices[L], a);
      const double t_init = inner_product(phi, b.u.slices[0], a);
      double t_lap = 0.0;
      for (int l = 0; l < L; ++l) t_lap += dt * inner_product(dphi2, b.u.slices[l], a);
      defect[a] = t_final - t_init - t_lap;
      scale_terms[a] = std::fabs(t_final) + std::fabs(t_init) + std::fabs(t_lap);
    }

    // rough nonlinearity: sum_l dt * int phi g(u) d_x u per slice
    std::vector<double> t_rough(n, 0.0);
    if (b.has_noise) {
      std::vector<double> gval(static_cast<size_t>(n) * n), dg(static_cast<size_t>(n) * n * n);
      for (int l = 0; l < L; ++l) {
        auto ref = b.X->lifts[l];
        std::shared_ptr<const RoughPath> lift = ref;
        if (!cfg.area_modifier.is_zero() && cfg.area_modifier.rows() == n)
          lift = std::make_shared<RoughPath>(ref->modify_levy_area(cfg.area_modifier));
        // Y = phi g(u), Y' = phi Dg(u) u'; Z = u with Z' = thetavals
        Field y(g, n * n), yp(g, n * n * n);
        const Field& u_l = b.u.slices[l];
        const Field& th_l = b.psi.thetavals.slices[l];
        for (int i = 0; i <= g.m; ++i) {
          cfg.g.value(u_l.node(i), gval);
          cfg.g.deriv(u_l.node(i), dg);
          for (int e = 0; e < n * n; ++e) y.at(i, e) = phi[i] * gval[e];
          for (int aa = 0; aa < n; ++aa)
            for (int bb = 0; bb < n; ++bb)
              for (int c = 0; c < n; ++c) {
                double s = 0.0;
                for (int e = 0; e < n; ++e)
                  s += dg[(static_cast<size_t>(aa) * n + bb) * n + e] * th_l.at(i, e * n + c);
                yp.at(i, (aa * n + bb) * n + c) = phi[i] * s;
              }
        }
        ControlledPath Y(lift, std::move(y), std::move(yp));
        ControlledPath Z(lift, u_l, th_l);
        Matrix ri = rough_integral_total(Y, Z);  // (n*n) x n
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int bb = 0; bb < n; ++bb) s += ri(a * n + bb, bb);
          t_rough[a] += dt * s;
        }
      }
    } else {
      // no noise: u is C^1, classical integral int phi g(u) u_x
      std::vector<double> gval(static_cast<size_t>(n) * n);
      for (int l = 0; l < L; ++l) {
        const Field& u_l = b.u.slices[l];
        Field du = spectral_derivative(u_l);
        for (int i = 0; i < g.m; ++i) {
          cfg.g.value(u_l.node(i), gval);
          for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int bb = 0; bb < n; ++bb) s += gval[static_cast<size_t>(a) * n + bb] * du.at(i, bb);
            t_rough[a] += dt * phi[i] * s * h;
          }
        }
      }
    }

    // martingale term from the stored increments
    std::vector<double> t_noise(n, 0.0);
    if (b.has_noise) {
      std::vector<double> th(static_cast<size_t>(n) * n);
      for (int l = 0; l < L; ++l) {
        NoiseIncrement inc = noise.increments(l);
        if (b.psi.mollified) inc = mollify(inc, b.psi.eps, g);
        const Field& u_l = b.u.slices[l];
        for (int i = 0; i < g.m; ++i) {
          cfg.theta.value(u_l.node(i), th);
          for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int c = 0; c < n; ++c) s += th[static_cast<size_t>(a) * n + c] * inc.at(i, c) * h;
            t_noise[a] += phi[i] * s;
          }
        }
      }
    }

    double resid = 0.0, sc = 0.0;
    for (int a = 0; a < n; ++a) {
      const double d = defect[a] - t_rough[a] - t_noise[a];
      resid += d * d;
      sc += scale_terms[a] + std::fabs(t_rough[a]) + std::fabs(t_noise[a]);
    }
    out.residual.push_back(std::sqrt(resid));
    out.scale.push_back(sc);
  }
  return out;
}

CorrectionReport correction_experiment(const SolverConfig& cfg, const Matrix& a) {
  CorrectionReport rep;
  SolverConfig cA = cfg;
  cA.area_modifier = Matrix();
  cA.reaction_area = Matrix();
  SolverConfig cB = cA;
  cB.area_modifier = a;
  SolverConfig cC = cA;
  cC.reaction_area = a;

  rep.plain = solve(cA);
  if (a.rows() == 0 || a.is_zero()) {
    rep.shifted = rep.plain;
    rep.forced = rep.plain;
    rep.exact_match = true;
    return rep;
  }
  rep.shifted = solve(cB);
  rep.forced = solve(cC);
  SpaceTimeField bc = rep.shifted.u;
  SpaceTimeField ba = rep.shifted.u;
  for (size_t l = 0; l < bc.slices.size(); ++l) {
    bc.slices[l] -= rep.forced.u.slices[l];
    ba.slices[l] -= rep.plain.u.slices[l];
  }
  rep.diff_shift_forced = parabolic_holder(bc, cfg.alpha);
  rep.diff_shift_plain = parabolic_holder(ba, cfg.alpha);
  rep.ratio = rep.diff_shift_forced / std::max(rep.diff_shift_plain, 1e-300);
  return rep;
}

GradientCheck gradient_consistency(const ControlledPath& u, const SmoothMap& g,
                                   const std::function<double(std::span<const double>)>& primitive,
                                   const TestFn& phi) {
  const RoughPath& lift = *u.reference();
  const double scale_geo = 1.0 + lift.base().sup_norm() * lift.base().sup_norm();
  if (lift.geometricity_defect() > 1e-10 * scale_geo)
    throw std::invalid_argument(
        "gradient_consistency: reference lift is not geometric; the identity only holds "
        "for geometric lifts");
  const SpatialGrid& gr = u.y().grid();
  const int m = gr.m;
  const int n = lift.n();
  const int d = g.d;
  if (u.p() != d) throw std::invalid_argument("gradient_consistency: dimension mismatch");

  // rough side: Y = phi * g(u) (row vector p=1 x d acting on du)
  Field y(gr, d), yp(gr, static_cast<size_t>(d) * n);
  std::vector<double> gv(d), jac(static_cast<size_t>(d) * d);
  for (int i = 0; i <= m; ++i) {
    const double p = phi.phi(gr.point(i));
    g.value(u.y().node(i), gv);
    g.jacobian(u.y().node(i), jac);
    for (int c = 0; c < d; ++c) y.at(i, c) = p * gv[c];
    for (int c = 0; c < d; ++c)
      for (int e = 0; e < n; ++e) {
        double s = 0.0;
        for (int q = 0; q < d; ++q)
          s += jac[static_cast<size_t>(c) * d + q] * u.yprime().at(i, q * n + e);
        yp.at(i, c * n + e) = p * s;
      }
  }
  ControlledPath Y(u.reference(), std::move(y), std::move(yp));
  Matrix ri = rough_integral_total(Y, u);  // d x d, want sum_c int Y_c dU_c
  double lhs = 0.0;
  for (int c = 0; c < d; ++c) lhs += ri(c, c);

  GradientCheck chk;
  chk.rough_side = lhs;
  double rhs = 0.0, mass = 0.0;
  const double h = gr.h();
  for (int i = 0; i < m; ++i) {
    const double dp = phi.dphi(gr.point(i));
    const double G = primitive(u.y().node(i));
    rhs -= dp * G * h;
    mass += std::fabs(dp * G) * h;
  }
  chk.primitive_side = rhs;
  chk.discrepancy = std::fabs(lhs - rhs);
  chk.term_scale = std::max({mass, std::fabs(lhs), std::fabs(rhs)});
  return chk;
}

}  // namespace rough
