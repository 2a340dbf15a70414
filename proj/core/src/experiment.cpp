#include "roughburgers/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "roughburgers/io.hpp"

namespace rough {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

void add_param(ReportRow& row, const std::string& k, const std::string& v) {
  row.params.emplace_back(k, v);
}
void add_param(ReportRow& row, const std::string& k, double v) {
  row.params.emplace_back(k, fmt_double(v));
}
void add_param(ReportRow& row, const std::string& k, int v) {
  row.params.emplace_back(k, std::to_string(v));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (ensemble < 1) throw std::invalid_argument("ExperimentConfig: ensemble >= 1");
  if (!std::is_sorted(eps_ladder.begin(), eps_ladder.end(), std::greater<>()) &&
      !std::is_sorted(eps_ladder.begin(), eps_ladder.end()))
    throw std::invalid_argument("ExperimentConfig: eps ladder must be sorted");
  if (!std::is_sorted(m_ladder.begin(), m_ladder.end()))
    throw std::invalid_argument("ExperimentConfig: m ladder must be sorted");
}

namespace {

struct RawConfig {
  std::map<std::string, std::string> solver, experiment;
};

RawConfig parse_sections(const std::string& text) {
  RawConfig raw;
  std::map<std::string, std::string>* section = &raw.experiment;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (name == "solver") section = &raw.solver;
      else if (name == "experiment") section = &raw.experiment;
      else throw std::invalid_argument("config: unknown section [" + name + "]");
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: expected key = value: " + t);
    (*section)[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return raw;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  RawConfig raw = parse_sections(text);
  ExperimentConfig cfg;
  std::string u0_name = "beta_sample";
  double u0_amp = 0.5;
  std::string g_name = "sin", theta_name = "inv_sqrt";

  for (const auto& [k, v] : raw.experiment) {
    if (k == "id") cfg.id = v;
    else if (k == "ensemble") cfg.ensemble = std::stoi(v);
    else if (k == "seed_base") cfg.seed_base = std::stoull(v);
    else if (k == "eps_ladder") {
      cfg.eps_ladder.clear();
      for (const auto& e : split(v, ',')) cfg.eps_ladder.push_back(std::stod(e));
    } else if (k == "m_ladder") {
      cfg.m_ladder.clear();
      for (const auto& e : split(v, ',')) cfg.m_ladder.push_back(std::stoi(e));
    } else if (k == "out") cfg.out_dir = v;
    else if (k == "threads") cfg.threads = std::stoi(v);
    else throw std::invalid_argument("config: unknown experiment key " + k);
  }
  SolverConfig& s = cfg.solver;
  for (const auto& [k, v] : raw.solver) {
    if (k == "n") s.n = std::stoi(v);
    else if (k == "g") g_name = v;
    else if (k == "theta") theta_name = v;
    else if (k == "alpha") s.alpha = std::stod(v);
    else if (k == "beta") s.beta = std::stod(v);
    else if (k == "m") s.m = std::stoi(v);
    else if (k == "dt") s.dt = std::stod(v);
    else if (k == "T") s.T = std::stod(v);
    else if (k == "K1") s.K1 = std::stod(v);
    else if (k == "K2") s.K2 = std::stod(v);
    else if (k == "K3") s.K3 = std::stod(v);
    else if (k == "K4") s.K4 = std::stod(v);
    else if (k == "K5") s.K5 = std::stod(v);
    else if (k == "picard_tol") s.picard_tol = std::stod(v);
    else if (k == "max_iters") s.max_iters = std::stoi(v);
    else if (k == "inner_tol") s.inner_tol = std::stod(v);
    else if (k == "inner_max_iters") s.inner_max_iters = std::stoi(v);
    else if (k == "seed") s.seed = std::stoull(v);
    else if (k == "eps") s.eps = std::stod(v);
    else if (k == "u0") u0_name = v;
    else if (k == "u0_amplitude") u0_amp = std::stod(v);
    else throw std::invalid_argument("config: unknown solver key " + k);
  }
  s.g = builtin_g(g_name, s.n);
  s.theta = builtin_theta(theta_name, s.n);
  if (u0_name == "zero") {
    s.u0 = Field(SpatialGrid(s.m), s.n);
  } else if (u0_name == "beta_sample") {
    s.u0 = sample_beta_holder(SpatialGrid(s.m), s.n, s.beta, s.seed ^ 0xA5A5A5A5ULL, u0_amp);
  } else {
    throw std::invalid_argument("config: unknown u0 " + u0_name);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config_text(read_file(path));
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "id = " << cfg.id << "\n";
  out << "ensemble = " << cfg.ensemble << "\n";
  out << "seed_base = " << cfg.seed_base << "\n";
  if (!cfg.eps_ladder.empty()) {
    out << "eps_ladder = ";
    for (size_t i = 0; i < cfg.eps_ladder.size(); ++i)
      out << (i ? "," : "") << fmt_double(cfg.eps_ladder[i]);
    out << "\n";
  }
  if (!cfg.m_ladder.empty()) {
    out << "m_ladder = ";
    for (size_t i = 0; i < cfg.m_ladder.size(); ++i)
      out << (i ? "," : "") << cfg.m_ladder[i];
    out << "\n";
  }
  out << "out = " << cfg.out_dir << "\n";
  out << "threads = " << cfg.threads << "\n";
  const SolverConfig& s = cfg.solver;
  out << "[solver]\n";
  out << "n = " << s.n << "\n";
  out << "g = " << s.g.name << "\n";
  out << "theta = " << s.theta.name << "\n";
  out << "alpha = " << fmt_double(s.alpha) << "\n";
  out << "beta = " << fmt_double(s.beta) << "\n";
  out << "m = " << s.m << "\n";
  out << "dt = " << fmt_double(s.dt) << "\n";
  out << "T = " << fmt_double(s.T) << "\n";
  out << "K1 = " << fmt_double(s.K1) << "\nK2 = " << fmt_double(s.K2) << "\nK3 = "
      << fmt_double(s.K3) << "\nK4 = " << fmt_double(s.K4) << "\nK5 = " << fmt_double(s.k5())
      << "\n";
  out << "picard_tol = " << fmt_double(s.picard_tol) << "\n";
  out << "max_iters = " << s.max_iters << "\n";
  out << "inner_tol = " << fmt_double(s.inner_tol) << "\n";
  out << "inner_max_iters = " << s.inner_max_iters << "\n";
  out << "seed = " << s.seed << "\n";
  out << "eps = " << fmt_double(s.eps) << "\n";
  return out.str();
}

void parallel_seeds(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= count || failed.load()) break;
        try {
          fn(k);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lk(err_mu);
          failed = true;
          error = e.what();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failed) throw std::runtime_error("parallel_seeds: " + error);
}

Quartiles quartiles(std::vector<double> v) {
  Quartiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double frac) {
    const double pos = frac * (v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - lo;
    return (1.0 - w) * v[lo] + w * v[hi];
  };
  q.median = at(0.5);
  q.iqr = at(0.75) - at(0.25);
  return q;
}

Report run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.eps_ladder.empty())
    throw std::invalid_argument("run_convergence: eps ladder required");
  const double h = 1.0 / cfg.solver.m;
  for (double e : cfg.eps_ladder)
    if (e < 2.0 * h || e > 0.25)
      throw std::invalid_argument("run_convergence: eps ladder must lie in [2h, 1/4]");

  std::vector<double> ladder = cfg.eps_ladder;
  std::sort(ladder.begin(), ladder.end(), std::greater<>());

  std::vector<std::vector<double>> diffs(ladder.size());
  for (auto& d : diffs) d.resize(cfg.ensemble, -1.0);
  std::vector<std::string> failures(cfg.ensemble);

  parallel_seeds(cfg.ensemble, cfg.threads, [&](int k) {
    SolverConfig sc = cfg.solver;
    sc.seed = cfg.seed_base + k;
    sc.eps = 0.0;
    try {
      SolutionBundle base = solve(sc);
      for (size_t e = 0; e < ladder.size(); ++e) {
        SolverConfig sm = sc;
        sm.eps = ladder[e];
        SolutionBundle mol = solve_mollified(sm);
        SpaceTimeField d = base.u;
        for (size_t l = 0; l < d.slices.size(); ++l) d.slices[l] -= mol.u.slices[l];
        diffs[e][k] = parabolic_holder(d, sc.alpha);
      }
    } catch (const std::exception& ex) {
      failures[k] = ex.what();
    }
  });

  Report rep;
  std::vector<double> medians;
  for (size_t e = 0; e < ladder.size(); ++e) {
    std::vector<double> ok;
    for (double d : diffs[e])
      if (d >= 0.0) ok.push_back(d);
    const Quartiles q = quartiles(ok);
    medians.push_back(q.median);
    ReportRow row;
    row.experiment = cfg.id.empty() ? "convergence" : cfg.id;
    add_param(row, "eps", ladder[e]);
    add_param(row, "m", cfg.solver.m);
    add_param(row, "dt", cfg.solver.dt);
    add_param(row, "T", cfg.solver.T);
    add_param(row, "seeds_ok", static_cast<int>(ok.size()));
    row.metric = "parabolic_diff_median";
    row.value = q.median;
    row.dispersion = q.iqr;
    row.seed_lo = cfg.seed_base;
    row.seed_hi = cfg.seed_base + cfg.ensemble - 1;
    rep.rows.push_back(row);
  }
  for (size_t e = 1; e < medians.size(); ++e)
    if (!(medians[e] < medians[e - 1])) rep.passed = false;
  return rep;
}

namespace {

void fill_row_common(ReportRow& row, const ExperimentConfig& cfg, const char* fallback_id) {
  row.experiment = cfg.id.empty() ? fallback_id : cfg.id;
  row.seed_lo = cfg.seed_base;
  row.seed_hi = cfg.seed_base + cfg.ensemble - 1;
}

Report rate_rough_integral_order(const ExperimentConfig& cfg) {
  Report rep;
  std::vector<double> ms, err2, err1;
  const double exact = 1.0 / 3.0;  // int_0^1 (x^2 + sin 2 pi x) dx
  for (int p = 4; p <= 10; ++p) {
    const int m = 1 << p;
    SpatialGrid g(m);
    Field z = Field::sampled_scalar(g, [](double x) { return x; });
    auto lift = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(z));
    Field y = Field::sampled_scalar(g, [](double x) {
      return x * x + std::sin(2.0 * std::numbers::pi * x);
    });
    Field yp = Field::sampled_scalar(g, [](double x) {
      return 2.0 * x + 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * x);
    });
    Field zp(g, 1);
    for (int i = 0; i <= m; ++i) zp.at(i) = 1.0;
    ControlledPath Y(lift, y, yp), Z(lift, z, zp);
    Matrix total = rough_integral_total(Y, Z);
    auto full = rough_integral(Y, Z);
    ms.push_back(m);
    err2.push_back(std::fabs(total(0, 0) - exact));
    err1.push_back(std::fabs(full.total_first_order(0, 0) - exact));
  }
  const ExponentFit f2 = fit_loglog(ms, err2);
  const ExponentFit f1 = fit_loglog(ms, err1);
  ReportRow r2;
  fill_row_common(r2, cfg, "rates");
  add_param(r2, "kind", std::string("rough_integral_order"));
  add_param(r2, "scheme", std::string("compensated"));
  r2.metric = "error_slope_vs_m";
  r2.value = f2.slope;
  r2.dispersion = f2.residual;
  rep.rows.push_back(r2);
  ReportRow r1 = r2;
  r1.params[1].second = "first_order";
  r1.value = f1.slope;
  r1.dispersion = f1.residual;
  rep.rows.push_back(r1);
  rep.passed = std::fabs(f2.slope + 2.0) <= 0.2 && std::fabs(f1.slope + 1.0) <= 0.2;
  return rep;
}

Report rate_remainder_scaling(const ExperimentConfig& cfg) {
  Report rep;
  const SolverConfig& s = cfg.solver;
  std::vector<double> slopes(cfg.ensemble, 0.0);
  parallel_seeds(cfg.ensemble, cfg.threads, [&](int k) {
    NoiseSpec sp{1, s.m, s.dt, cfg.seed_base + k, s.T};
    GeneratorNoise noise(sp);
    const SpatialGrid g(s.m);
    const int L = sp.steps();
    SpaceTimeField theta(g, 1, s.dt, L);
    for (int l = 0; l <= L; ++l)
      for (int i = 0; i <= g.m; ++i)
        theta.slices[l].at(i) = std::sin(2.0 * std::numbers::pi * g.point(i));
    ControlledConvolution psi = stoch_conv(theta, noise);
    const Field& ps = psi.psi.slices[L];
    const Field& th = theta.slices[L];
    const Field& x = psi.coupled_x->field.slices[L];
    std::vector<double> lags, maxr;
    for (int lag = 1; lag <= g.m / 4; lag <<= 1) {
      double best = 0.0;
      for (int i = 0; i + lag <= g.m; ++i) {
        const double r = ps.at(i + lag) - ps.at(i) - th.at(i) * (x.at(i + lag) - x.at(i));
        best = std::max(best, std::fabs(r));
      }
      lags.push_back(lag * g.h());
      maxr.push_back(best);
    }
    slopes[k] = fit_loglog(lags, maxr).slope;
  });
  const Quartiles q = quartiles(slopes);
  ReportRow row;
  fill_row_common(row, cfg, "rates");
  add_param(row, "kind", std::string("remainder_scaling"));
  add_param(row, "m", s.m);
  add_param(row, "T", s.T);
  add_param(row, "alpha_target", 0.4);
  row.metric = "remainder_slope_median";
  row.value = q.median;
  row.dispersion = q.iqr;
  rep.rows.push_back(row);
  rep.passed = q.median >= 0.75;
  return rep;
}

Report rate_kernel_bounds(const ExperimentConfig& cfg) {
  Report rep;
  HeatKernel hk;
  const double alpha = 0.4;
  std::vector<double> scales;
  for (int p = 3; p <= 8; ++p) scales.push_back(std::pow(2.0, -p));
  struct Spec {
    KernelBound id;
    const char* name;
    double want, tol;
  };
  const Spec specs[] = {
      {KernelBound::SR1, "SR1", 1.0, 0.1},
      {KernelBound::TR, "TR", 0.5, 0.1},
      {KernelBound::I1, "I1", 1.0 + 2.0 * alpha, 0.1},
      {KernelBound::I2, "I2", 1.0 + 2.0 * alpha, 0.1},
  };
  for (const auto& spec : specs) {
    const auto chk = kernel_bound_check(spec.id, alpha, scales, 0.5, hk);
    ReportRow row;
    fill_row_common(row, cfg, "rates");
    add_param(row, "kind", std::string("kernel_bounds"));
    add_param(row, "bound_id", std::string(spec.name));
    add_param(row, "alpha", alpha);
    row.metric = "exponent_fit";
    row.value = chk.fit.slope;
    row.dispersion = chk.fit.residual;
    rep.rows.push_back(row);
    if (std::fabs(chk.fit.slope - spec.want) > spec.tol) rep.passed = false;
  }
  return rep;
}

Report rate_holder_exponents(const ExperimentConfig& cfg) {
  Report rep;
  const int m = 1 << 14;
  const double dt = 1e-5, T = 0.1;
  std::vector<double> sp_slopes(cfg.ensemble), tm_slopes(cfg.ensemble);
  parallel_seeds(cfg.ensemble, cfg.threads, [&](int k) {
    NoiseSpec sp{1, m, dt, cfg.seed_base + k, T};
    const Field slice = spectral_slice(sp, T, m / 2 - 1);
    sp_slopes[k] = estimate_holder_exponent(slice, 2, 10).slope;
    const auto series = spectral_point_series(sp, 0.3, m / 2 - 1);
    tm_slopes[k] = estimate_exponent_series(series, dt, 2, 10).slope;
  });
  int sp_ok = 0, tm_ok = 0;
  for (int k = 0; k < cfg.ensemble; ++k) {
    if (sp_slopes[k] >= 0.42 && sp_slopes[k] <= 0.50) ++sp_ok;
    if (tm_slopes[k] >= 0.20 && tm_slopes[k] <= 0.28) ++tm_ok;
  }
  const Quartiles qs = quartiles(sp_slopes), qt = quartiles(tm_slopes);
  ReportRow rs;
  fill_row_common(rs, cfg, "rates");
  add_param(rs, "kind", std::string("holder_exponents"));
  add_param(rs, "direction", std::string("space"));
  add_param(rs, "m", m);
  add_param(rs, "in_range", sp_ok);
  rs.metric = "holder_slope_median";
  rs.value = qs.median;
  rs.dispersion = qs.iqr;
  rep.rows.push_back(rs);
  ReportRow rt = rs;
  rt.params[1].second = "time";
  rt.params[3].second = std::to_string(tm_ok);
  rt.value = qt.median;
  rt.dispersion = qt.iqr;
  rep.rows.push_back(rt);
  rep.passed = sp_ok * 5 >= cfg.ensemble * 4 && tm_ok * 5 >= cfg.ensemble * 4;
  return rep;
}

}  // namespace

RateStudy rate_study_from_string(const std::string& s) {
  if (s == "rough_integral_order") return RateStudy::rough_integral_order;
  if (s == "remainder_scaling") return RateStudy::remainder_scaling;
  if (s == "kernel_bounds") return RateStudy::kernel_bounds;
  if (s == "holder_exponents") return RateStudy::holder_exponents;
  throw std::invalid_argument("unknown rate study: " + s);
}

Report run_rate_study(const ExperimentConfig& cfg, RateStudy kind) {
  switch (kind) {
    case RateStudy::rough_integral_order: return rate_rough_integral_order(cfg);
    case RateStudy::remainder_scaling: return rate_remainder_scaling(cfg);
    case RateStudy::kernel_bounds: return rate_kernel_bounds(cfg);
    case RateStudy::holder_exponents: return rate_holder_exponents(cfg);
  }
  throw std::logic_error("run_rate_study: bad kind");
}

Report run_correction(const ExperimentConfig& cfg) {
  Report rep;
  struct Case {
    const char* name;
    int n;
    const char* g;
    const char* theta;
  };
  const Case cases[] = {{"1d", 1, "linear", "one"}, {"2d_pure_area", 2, "pure_area", "identity"}};
  for (const Case& cs : cases) {
    std::vector<double> ratios(cfg.ensemble, 0.0);
    std::vector<double> bc(cfg.ensemble, 0.0), ba(cfg.ensemble, 0.0);
    parallel_seeds(cfg.ensemble, cfg.threads, [&](int k) {
      SolverConfig sc = cfg.solver;
      sc.n = cs.n;
      sc.g = builtin_g(cs.g, cs.n);
      sc.theta = builtin_theta(cs.theta, cs.n);
      sc.seed = cfg.seed_base + k;
      sc.u0 = sample_beta_holder(SpatialGrid(sc.m), sc.n, sc.beta, sc.seed ^ 0xA5A5A5A5ULL, 0.5);
      Matrix a;
      if (cs.n == 1) {
        a = Matrix(1, 1);
        a(0, 0) = 1.0;
      } else {
        a = Matrix(2, 2);
        a(0, 1) = 1.0;
        a(1, 0) = -1.0;
      }
      const CorrectionReport cr = correction_experiment(sc, a);
      ratios[k] = cr.ratio;
      bc[k] = cr.diff_shift_forced;
      ba[k] = cr.diff_shift_plain;
    });
    const Quartiles q = quartiles(ratios);
    ReportRow row;
    fill_row_common(row, cfg, "correction");
    add_param(row, "case", std::string(cs.name));
    add_param(row, "m", cfg.solver.m);
    add_param(row, "T", cfg.solver.T);
    row.metric = "ratio_BC_over_BA_median";
    row.value = q.median;
    row.dispersion = q.iqr;
    rep.rows.push_back(row);
    ReportRow rbc = row;
    rbc.metric = "diff_BC_median";
    rbc.value = quartiles(bc).median;
    rbc.dispersion = quartiles(bc).iqr;
    rep.rows.push_back(rbc);
    ReportRow rba = row;
    rba.metric = "diff_BA_median";
    rba.value = quartiles(ba).median;
    rba.dispersion = quartiles(ba).iqr;
    rep.rows.push_back(rba);
    if (!(q.median <= 0.1)) rep.passed = false;
  }
  return rep;
}

Report run_gradient(const ExperimentConfig& cfg) {
  Report rep;
  std::vector<int> ladder = cfg.m_ladder;
  if (ladder.empty()) ladder = {128, 256, 512, 1024};
  SmoothMap gmap;
  gmap.d = 1;
  gmap.p = 1;
  gmap.value = [](std::span<const double> u, std::span<double> out) { out[0] = u[0]; };
  gmap.jacobian = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  auto primitive = [](std::span<const double> u) { return 0.5 * u[0] * u[0]; };
  TestFn phi{
      [](double x) { return 1.0 + std::cos(2.0 * std::numbers::pi * x); },
      [](double x) { return -2.0 * std::numbers::pi * std::sin(2.0 * std::numbers::pi * x); },
      [](double x) {
        return -4.0 * std::numbers::pi * std::numbers::pi * std::cos(2.0 * std::numbers::pi * x);
      }};

  std::vector<double> med_disc, med_rel, ms;
  for (int m : ladder) {
    std::vector<double> disc(cfg.ensemble), rel(cfg.ensemble);
    parallel_seeds(cfg.ensemble, cfg.threads, [&](int k) {
      NoiseSpec sp{1, m, 1e-4, cfg.seed_base + k, 0.5};
      Field u = spectral_slice(sp, 0.5, m / 2 - 1);
      auto lift = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(u));
      Field uprime(u.grid(), 1);
      for (int i = 0; i <= m; ++i) uprime.at(i) = 1.0;
      ControlledPath cu(lift, u, uprime);
      const GradientCheck chk = gradient_consistency(cu, gmap, primitive, phi);
      disc[k] = chk.discrepancy;
      rel[k] = chk.discrepancy / std::max(chk.term_scale, 1e-300);
    });
    med_disc.push_back(quartiles(disc).median);
    med_rel.push_back(quartiles(rel).median);
    ms.push_back(m);
    ReportRow row;
    fill_row_common(row, cfg, "gradient");
    add_param(row, "m", m);
    row.metric = "discrepancy_median";
    row.value = med_disc.back();
    row.dispersion = quartiles(disc).iqr;
    rep.rows.push_back(row);
    ReportRow rr = row;
    rr.metric = "relative_discrepancy_median";
    rr.value = med_rel.back();
    rr.dispersion = quartiles(rel).iqr;
    rep.rows.push_back(rr);
  }
  const ExponentFit fit = fit_loglog(ms, med_disc);
  ReportRow rs;
  fill_row_common(rs, cfg, "gradient");
  add_param(rs, "m_lo", ladder.front());
  add_param(rs, "m_hi", ladder.back());
  rs.metric = "discrepancy_slope_vs_m";
  rs.value = fit.slope;
  rs.dispersion = fit.residual;
  rep.rows.push_back(rs);
  rep.passed = fit.slope < 0.0 && med_rel.back() <= 1e-2;
  return rep;
}

Report run_simulate(const ExperimentConfig& cfg) {
  Report rep;
  SolverConfig sc = cfg.solver;
  sc.seed = cfg.seed_base;
  const SolutionBundle b = solve(sc);
  if (!cfg.out_dir.empty()) {
    std::vector<double> dumps = {0.0, sc.T / 2.0, sc.T};
    save_bundle(b, cfg.out_dir + "/bundle", dumps);
    write_file(cfg.out_dir + "/config_echo.txt", config_echo(cfg));
  }
  ReportRow row;
  fill_row_common(row, cfg, "simulate");
  add_param(row, "m", sc.m);
  add_param(row, "T", sc.T);
  add_param(row, "triggered", b.monitor.triggered ? std::string("yes") : std::string("no"));
  row.metric = "final_sup_norm";
  row.value = b.u.slices.back().sup_norm();
  rep.rows.push_back(row);
  ReportRow r2 = row;
  r2.metric = "outer_iterations";
  r2.value = b.outer_iterations;
  rep.rows.push_back(r2);
  rep.passed = !b.monitor.triggered;
  return rep;
}

Report run_validate(const ExperimentConfig& cfg) {
  Report rep;
  auto check = [&](const std::string& name, bool ok, double value) {
    ReportRow row;
    fill_row_common(row, cfg, "validate");
    add_param(row, "check", name);
    row.metric = "value";
    row.value = value;
    rep.rows.push_back(row);
    if (!ok) rep.passed = false;
  };

  {  // Chen relation on a lifted smooth path
    SpatialGrid g(256);
    Field f = Field::sampled_scalar(g, [](double x) { return std::sin(2.0 * std::numbers::pi * x) + x; });
    auto rp = RoughPath::lift_piecewise_linear(f);
    const double res = rp.chen_residual();
    const double cap = 1e-12 * (1.0 + f.sup_norm() * f.sup_norm());
    check("chen_residual_smooth", res <= cap, res);
  }
  {  // geometric identity int X dX = (X(1)^2 - X(0)^2)/2
    NoiseSpec sp{1, 256, 1e-3, cfg.seed_base, 0.25};
    Field x = spectral_slice(sp, 0.25, 127);
    auto lift = std::make_shared<RoughPath>(RoughPath::lift_piecewise_linear(x));
    Field one(x.grid(), 1);
    for (int i = 0; i <= 256; ++i) one.at(i) = 1.0;
    ControlledPath cx(lift, x, one);
    const Matrix total = rough_integral_total(cx, cx);
    const double want = 0.5 * (x.at(256) * x.at(256) - x.at(0) * x.at(0));
    check("geometric_integral_identity", std::fabs(total(0, 0) - want) <= 1e-12, total(0, 0) - want);
  }
  {  // N o delta == 0
    SpatialGrid g(64);
    Field f = sample_beta_holder(g, 1, 0.45, cfg.seed_base, 1.0);
    const double nmax = n_max_abs(delta(f));
    check("n_of_delta_zero", nmax <= 1e-13, nmax);
  }
  {  // semigroup mass conservation + eigenfunction decay
    SpatialGrid g(128);
    Field f = Field::sampled_scalar(g, [](double x) { return std::sin(6.0 * std::numbers::pi * x); });
    Field sf = semigroup_apply(0.01, f);
    const double lam = std::exp(-36.0 * std::numbers::pi * std::numbers::pi * 0.01);
    double worst = 0.0;
    for (int i = 0; i <= 128; ++i) worst = std::max(worst, std::fabs(sf.at(i) - lam * f.at(i)));
    check("semigroup_eigenfunction", worst <= 1e-12, worst);
  }
  {  // mollifier mass preservation
    NoiseSpec sp{1, 128, 1e-3, cfg.seed_base + 7, 0.1};
    GeneratorNoise noise(sp);
    NoiseIncrement inc = noise.increments(0);
    NoiseIncrement mol = mollify(inc, 0.05, SpatialGrid(128));
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i < 128; ++i) {
      s0 += inc.at(i);
      s1 += mol.at(i);
    }
    check("mollify_mass", std::fabs(s0 - s1) <= 1e-10 * std::max(1.0, std::fabs(s0)), s1 - s0);
  }
  {  // end-to-end determinism of a small solve
    SolverConfig sc = cfg.solver;
    sc.n = 1;
    sc.g = builtin_g("sin", 1);
    sc.theta = builtin_theta("inv_sqrt", 1);
    sc.m = 64;
    sc.dt = 1e-3;
    sc.T = 0.02;
    sc.seed = cfg.seed_base;
    sc.u0 = sample_beta_holder(SpatialGrid(64), 1, sc.beta, 11, 0.5);
    const SolutionBundle b1 = solve(sc);
    const SolutionBundle b2 = solve(sc);
    bool same = true;
    for (int l = 0; l <= b1.u.steps() && same; ++l)
      same = b1.u.slices[l].data() == b2.u.slices[l].data();
    check("determinism_bitwise", same, same ? 1.0 : 0.0);
  }
  return rep;
}

std::string emit(const Report& report, EmitFormat format) {
  if (report.rows.empty()) throw std::invalid_argument("emit: empty report");
  if (format == EmitFormat::csv) {
    std::ostringstream out;
    out << "experiment,params,metric,value,dispersion,seed_lo,seed_hi\n";
    for (const ReportRow& r : report.rows) {
      out << r.experiment << ",";
      for (size_t i = 0; i < r.params.size(); ++i)
        out << (i ? ";" : "") << r.params[i].first << "=" << r.params[i].second;
      out << "," << r.metric << "," << fmt_double(r.value) << "," << fmt_double(r.dispersion)
          << "," << r.seed_lo << "," << r.seed_hi << "\n";
    }
    return out.str();
  }
  nlohmann::json j;
  j["passed"] = report.passed;
  j["rows"] = nlohmann::json::array();
  for (const ReportRow& r : report.rows) {
    nlohmann::json row;
    row["experiment"] = r.experiment;
    for (const auto& [k, v] : r.params) row["params"][k] = v;
    row["metric"] = r.metric;
    row["value"] = r.value;
    row["dispersion"] = r.dispersion;
    row["seed_lo"] = r.seed_lo;
    row["seed_hi"] = r.seed_hi;
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

void emit_to_dir(const Report& report, const std::string& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/" + stem + ".csv", emit(report, EmitFormat::csv));
  write_file(dir + "/" + stem + ".json", emit(report, EmitFormat::json));
}

Report parse_report_csv(const std::string& csv) {
  Report rep;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("parse_report_csv: empty");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) throw std::runtime_error("parse_report_csv: bad row");
    ReportRow r;
    r.experiment = cells[0];
    for (const auto& kv : split(cells[1], ';')) {
      const size_t eq = kv.find('=');
      if (eq != std::string::npos) r.params.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    r.metric = cells[2];
    r.value = std::strtod(cells[3].c_str(), nullptr);
    r.dispersion = std::strtod(cells[4].c_str(), nullptr);
    r.seed_lo = std::stoull(cells[5]);
    r.seed_hi = std::stoull(cells[6]);
    rep.rows.push_back(r);
  }
  return rep;
}

}  // namespace rough
