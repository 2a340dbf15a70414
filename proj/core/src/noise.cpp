#include "roughburgers/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace rough {

namespace {
constexpr char kMagic[8] = {'R', 'B', 'N', 'O', 'I', 'S', 'E', '1'};
constexpr std::uint64_t kCellStream = 1;
}  // namespace

void NoiseSpec::validate() const {
  if (m < 2) throw std::invalid_argument("NoiseSpec: m >= 2 required");
  if (!(dt > 0.0)) throw std::invalid_argument("NoiseSpec: dt > 0 required");
  if (n < 1) throw std::invalid_argument("NoiseSpec: n >= 1 required");
  if (!(T > 0.0)) throw std::invalid_argument("NoiseSpec: T > 0 required");
}

int NoiseSpec::steps() const { return static_cast<int>(std::llround(T / dt)); }

GeneratorNoise::GeneratorNoise(NoiseSpec spec) : spec_(spec), rng_(spec.seed) {
  spec_.validate();
}

NoiseIncrement GeneratorNoise::increments(int step) const {
  if (step < 0 || step >= spec_.steps())
    throw std::out_of_range("GeneratorNoise: step out of range");
  NoiseIncrement inc;
  inc.step = step;
  inc.m = spec_.m;
  inc.n = spec_.n;
  inc.values.resize(static_cast<size_t>(spec_.m) * spec_.n);
  const double sigma = std::sqrt(spec_.dt * spec_.m);
  for (int cell = 0; cell < spec_.m; ++cell)
    for (int c = 0; c < spec_.n; ++c)
      inc.at(cell, c) = sigma * rng_.gaussian(kCellStream, static_cast<std::uint64_t>(step),
                                              static_cast<std::uint64_t>(cell) * spec_.n + c);
  draws_ += static_cast<long long>(spec_.m) * spec_.n;
  return inc;
}

ReplayNoise::ReplayNoise(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ReplayNoise: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("ReplayNoise: bad magic in " + path);
  std::int32_t n, m;
  std::int64_t steps;
  in.read(reinterpret_cast<char*>(&spec_.seed), 8);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&m), 4);
  in.read(reinterpret_cast<char*>(&spec_.dt), 8);
  in.read(reinterpret_cast<char*>(&spec_.T), 8);
  in.read(reinterpret_cast<char*>(&steps), 8);
  spec_.n = n;
  spec_.m = m;
  spec_.validate();
  data_.resize(static_cast<size_t>(steps) * m * n);
  in.read(reinterpret_cast<char*>(data_.data()),
          static_cast<std::streamsize>(data_.size() * sizeof(double)));
  if (!in) throw std::runtime_error("ReplayNoise: truncated file " + path);
}

NoiseIncrement ReplayNoise::increments(int step) const {
  if (step < 0 || step >= spec_.steps())
    throw std::out_of_range("ReplayNoise: step out of range");
  NoiseIncrement inc;
  inc.step = step;
  inc.m = spec_.m;
  inc.n = spec_.n;
  const size_t stride = static_cast<size_t>(spec_.m) * spec_.n;
  inc.values.assign(data_.begin() + step * stride, data_.begin() + (step + 1) * stride);
  draws_ += static_cast<long long>(stride);
  return inc;
}

void save_noise(const NoiseSource& src, const std::string& path) {
  const NoiseSpec& sp = src.spec();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_noise: cannot open " + path);
  out.write(kMagic, 8);
  const std::int32_t n = sp.n, m = sp.m;
  const std::int64_t steps = sp.steps();
  out.write(reinterpret_cast<const char*>(&sp.seed), 8);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&sp.dt), 8);
  out.write(reinterpret_cast<const char*>(&sp.T), 8);
  out.write(reinterpret_cast<const char*>(&steps), 8);
  for (int s = 0; s < steps; ++s) {
    const NoiseIncrement inc = src.increments(s);
    out.write(reinterpret_cast<const char*>(inc.values.data()),
              static_cast<std::streamsize>(inc.values.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_noise: write failed for " + path);
}

WindowedNoise::WindowedNoise(const NoiseSource& base, int offset_steps, int steps)
    : base_(base), offset_(offset_steps), spec_(base.spec()) {
  if (offset_steps < 0 || steps < 1 || offset_steps + steps > base.spec().steps())
    throw std::invalid_argument("WindowedNoise: window out of range");
  spec_.T = steps * spec_.dt;
}

NoiseIncrement WindowedNoise::increments(int step) const {
  if (step < 0 || step >= spec_.steps())
    throw std::out_of_range("WindowedNoise: step out of range");
  NoiseIncrement inc = base_.increments(offset_ + step);
  inc.step = step;
  return inc;
}

double Mollifier::profile(double x) {
  if (std::fabs(x) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

namespace {
double profile_mass() {
  // one-time midpoint quadrature of the bump mass on (-1,1)
  static const double mass = [] {
    const int N = 1 << 16;
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      const double x = -1.0 + 2.0 * (i + 0.5) / N;
      s += Mollifier::profile(x) * 2.0 / N;
    }
    return s;
  }();
  return mass;
}
}  // namespace

Mollifier::Mollifier(double eps_) : eps(eps_) {
  if (!(eps > 0.0)) throw std::invalid_argument("Mollifier: eps > 0 required");
}

double Mollifier::density(double x) const {
  return profile(x / eps) / (profile_mass() * eps);
}

bool mollifier_underresolved(double eps, const SpatialGrid& g) {
  return eps < 2.0 * g.h();
}

NoiseIncrement mollify(const NoiseIncrement& inc, double eps, const SpatialGrid& g) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps > 0 required");
  if (inc.m != g.m) throw std::invalid_argument("mollify: grid mismatch");
  const double h = g.h();
  const int R = static_cast<int>(std::ceil(eps / h));
  Mollifier eta(eps);
  std::vector<double> w;
  double mass = 0.0;
  for (int r = -R; r <= R; ++r) {
    const double v = eta.density(r * h);
    w.push_back(v);
    mass += v;
  }
  if (mass <= 0.0) throw std::invalid_argument("mollify: degenerate kernel");
  for (auto& x : w) x /= mass;

  NoiseIncrement out;
  out.step = inc.step;
  out.m = inc.m;
  out.n = inc.n;
  out.values.assign(inc.values.size(), 0.0);
  const int m = inc.m;
  for (int cell = 0; cell < m; ++cell) {
    for (int r = -R; r <= R; ++r) {
      const double wr = w[r + R];
      if (wr == 0.0) continue;
      int src = (cell - r) % m;
      if (src < 0) src += m;
      for (int c = 0; c < inc.n; ++c) out.at(cell, c) += wr * inc.at(src, c);
    }
  }
  return out;
}

namespace {

double rect_increment(const GridFunction2D& K, int i0, int i1, int j0, int j1) {
  return K.at(i1, j1) + K.at(i0, j0) - K.at(i1, j0) - K.at(i0, j1);
}

}  // namespace

RhoVariationResult rho_variation(const GridFunction2D& K, double rho,
                                 int i0, int i1, int j0, int j1) {
  if (rho < 1.0) throw std::invalid_argument("rho_variation: rho >= 1 required");
  if (i0 >= i1 || j0 >= j1 || i1 > K.nx || j1 > K.ny)
    throw std::invalid_argument("rho_variation: bad rectangle");
  RhoVariationResult res;
  if (rho == 1.0) {
    // refining never decreases the rho = 1 sum, so the finest grid partition
    // attains the sup among grid partitions
    double s = 0.0;
    for (int i = i0; i < i1; ++i)
      for (int j = j0; j < j1; ++j)
        s += std::fabs(rect_increment(K, i, i + 1, j, j + 1));
    res.value = s;
    res.exact = true;
    return res;
  }
  // dyadic ladder: block sizes 1, 2, 4, ... cells
  const int di = i1 - i0, dj = j1 - j0;
  double best = 0.0;
  for (int b = 1; b <= std::max(di, dj); b <<= 1) {
    double s = 0.0;
    for (int i = i0; i < i1; i += b)
      for (int j = j0; j < j1; j += b) {
        const int ii = std::min(i + b, i1);
        const int jj = std::min(j + b, j1);
        s += std::pow(std::fabs(rect_increment(K, i, ii, j, jj)), rho);
      }
    best = std::max(best, std::pow(s, 1.0 / rho));
  }
  res.value = best;
  res.exact = false;
  return res;
}

RhoVariationResult rho_variation(const GridFunction2D& K, double rho) {
  return rho_variation(K, rho, 0, K.nx, 0, K.ny);
}

double covariance_k1_closed(double x) {
  const double y = x - std::floor(x);
  return 0.5 * y * (1.0 - y) - 1.0 / 12.0;
}

double covariance_mode_sum(double t, double x, int kmax) {
  double s = 0.0;
  for (int k = kmax; k >= 1; --k) {
    const double w = 2.0 * std::numbers::pi * k;
    s += (1.0 - std::exp(-2.0 * w * w * t)) / (w * w) * std::cos(w * x);
  }
  return s;
}

CovarianceEstimate covariance_estimate(std::span<const Field> samples, double t, int kmax) {
  if (samples.size() < 100)
    throw std::invalid_argument("covariance_estimate: need >= 100 samples");
  const int m = samples[0].grid().m;
  CovarianceEstimate est;
  est.samples = static_cast<int>(samples.size());
  est.t = t;
  est.empirical = Matrix(m + 1, m + 1);
  for (const Field& f : samples) {
    if (f.grid().m != m) throw std::invalid_argument("covariance_estimate: mixed grids");
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) est.empirical(i, j) += f.at(i, 0) * f.at(j, 0);
  }
  est.empirical *= 1.0 / est.samples;
  est.target_var = t + covariance_mode_sum(t, 0.0, kmax);
  // variance of the variance estimator for Gaussians: 2 sigma^4 / N
  est.mc_stderr = est.target_var * std::sqrt(2.0 / est.samples);
  double dev = 0.0;
  for (int i = 0; i <= m; ++i)
    dev = std::max(dev, std::fabs(est.empirical(i, i) - est.target_var));
  est.max_diag_dev = dev;
  return est;
}

}  // namespace rough
