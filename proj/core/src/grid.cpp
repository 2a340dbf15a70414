#include "roughburgers/grid.hpp"

#include <algorithm>
#include <cmath>

#include "roughburgers/fft.hpp"

namespace rough {

Field Field::sampled(SpatialGrid g, int dim,
                     const std::function<void(double, std::span<double>)>& fn) {
  Field f(g, dim);
  for (int i = 0; i <= g.m; ++i) fn(g.point(i), f.node(i));
  return f;
}

Field Field::sampled_scalar(SpatialGrid g, const std::function<double(double)>& fn) {
  Field f(g, 1);
  for (int i = 0; i <= g.m; ++i) f.at(i) = fn(g.point(i));
  return f;
}

void Field::close_periodic() {
  for (int c = 0; c < dim_; ++c) at(grid_.m, c) = at(0, c);
}

bool Field::is_periodic(double tol) const {
  for (int c = 0; c < dim_; ++c)
    if (std::fabs(at(grid_.m, c) - at(0, c)) > tol) return false;
  return true;
}

bool Field::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

double Field::sup_norm() const {
  double best = 0.0;
  for (int i = 0; i <= grid_.m; ++i) {
    double s = 0.0;
    for (int c = 0; c < dim_; ++c) s += at(i, c) * at(i, c);
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

Field& Field::operator+=(const Field& o) {
  if (grid_ != o.grid_ || dim_ != o.dim_) throw std::invalid_argument("Field +=: shape mismatch");
  for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}
Field& Field::operator-=(const Field& o) {
  if (grid_ != o.grid_ || dim_ != o.dim_) throw std::invalid_argument("Field -=: shape mismatch");
  for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}
Field& Field::operator*=(double s) {
  for (auto& x : v_) x *= s;
  return *this;
}
void Field::axpy(double a, const Field& x) {
  if (grid_ != x.grid_ || dim_ != x.dim_) throw std::invalid_argument("Field axpy: shape mismatch");
  for (size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
}

Field operator+(Field a, const Field& b) { a += b; return a; }
Field operator-(Field a, const Field& b) { a -= b; return a; }

TwoPointField::TwoPointField(SpatialGrid g, int payload)
    : grid_(g), payload_(payload) {
  if (payload < 1) throw std::invalid_argument("TwoPointField: payload >= 1");
  v_.assign(static_cast<size_t>(pair_count()) * payload_, 0.0);
}

size_t TwoPointField::index(int i, int j) const {
  if (i > j || i < 0 || j > grid_.m) throw std::out_of_range("TwoPointField: need 0 <= i <= j <= m");
  // row i starts after rows 0..i-1, row i holds pairs (i,i)..(i,m)
  const long long mp1 = grid_.m + 1;
  const long long row_start = static_cast<long long>(i) * mp1 - static_cast<long long>(i) * (i - 1) / 2;
  return static_cast<size_t>(row_start + (j - i));
}

std::span<double> TwoPointField::pair(int i, int j) {
  return {v_.data() + index(i, j) * payload_, static_cast<size_t>(payload_)};
}
std::span<const double> TwoPointField::pair(int i, int j) const {
  return {v_.data() + index(i, j) * payload_, static_cast<size_t>(payload_)};
}

double TwoPointField::magnitude(int i, int j) const {
  auto p = pair(i, j);
  double s = 0.0;
  for (double x : p) s += x * x;
  return std::sqrt(s);
}

TwoPointField delta(const Field& f) {
  TwoPointField R(f.grid(), f.dim());
  const int m = f.grid().m;
  const int n = f.dim();
  for (int i = 0; i <= m; ++i)
    for (int j = i; j <= m; ++j) {
      auto out = R.pair(i, j);
      for (int c = 0; c < n; ++c) out[c] = f.at(j, c) - f.at(i, c);
    }
  return R;
}

void n_apply(const TwoPointField& R, int i, int j, int k, std::span<double> out) {
  auto a = R.pair(i, k);
  auto b = R.pair(i, j);
  auto c = R.pair(j, k);
  for (int p = 0; p < R.payload(); ++p) out[p] = a[p] - b[p] - c[p];
}

double n_max_abs(const TwoPointField& R) {
  const int m = R.grid().m;
  std::vector<double> buf(R.payload());
  double best = 0.0;
  for (int i = 0; i <= m; ++i)
    for (int j = i; j <= m; ++j)
      for (int k = j; k <= m; ++k) {
        n_apply(R, i, j, k, buf);
        double s = 0.0;
        for (double x : buf) s += x * x;
        best = std::max(best, s);
      }
  return std::sqrt(best);
}

namespace {

void check_alpha01(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("holder_seminorm: alpha must lie in (0,1]");
}

}  // namespace

double holder_seminorm(const Field& f, double alpha) {
  check_alpha01(alpha);
  return holder_seminorm_argmax(f, alpha).value;
}

SeminormResult holder_seminorm_argmax(const Field& f, double alpha) {
  check_alpha01(alpha);
  const int m = f.grid().m;
  const int n = f.dim();
  const double h = f.grid().h();
  SeminormResult best;
  for (int lag = 1; lag <= m; ++lag) {
    const double w = 1.0 / std::pow(lag * h, alpha);
    for (int i = 0; i + lag <= m; ++i) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) {
        const double d = f.at(i + lag, c) - f.at(i, c);
        s += d * d;
      }
      const double r = std::sqrt(s) * w;
      if (r > best.value) best = {r, i, i + lag};
    }
  }
  return best;
}

double holder_seminorm_dyadic(const Field& f, double alpha) {
  check_alpha01(alpha);
  const int m = f.grid().m;
  const int n = f.dim();
  const double h = f.grid().h();
  double best = 0.0;
  for (int lag = 1; lag <= m; lag <<= 1) {
    const double w = 1.0 / std::pow(lag * h, alpha);
    for (int i = 0; i + lag <= m; ++i) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) {
        const double d = f.at(i + lag, c) - f.at(i, c);
        s += d * d;
      }
      best = std::max(best, std::sqrt(s) * w);
    }
  }
  return best;
}

double two_point_norm(const TwoPointField& R, double gamma) {
  if (!(gamma > 0.0 && gamma <= 2.0))
    throw std::invalid_argument("two_point_norm: gamma must lie in (0,2]");
  const int m = R.grid().m;
  const double h = R.grid().h();
  double best = 0.0;
  for (int lag = 1; lag <= m; ++lag) {
    const double w = 1.0 / std::pow(lag * h, gamma);
    for (int i = 0; i + lag <= m; ++i)
      best = std::max(best, R.magnitude(i, i + lag) * w);
  }
  return best;
}

double parabolic_holder_seminorm(const SpaceTimeField& u, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("parabolic_holder: alpha must lie in (0,1)");
  if (u.steps() < 1 || u.grid().m < 2)
    throw std::invalid_argument("parabolic_holder: degenerate space-time grid");
  const int L = u.steps();
  const int m = u.grid().m;
  const int n = u.dim();

  double space = 0.0;
  for (const Field& s : u.slices) space = std::max(space, holder_seminorm(s, alpha));

  double time = 0.0;
  const double ha = alpha / 2.0;
  for (int lag = 1; lag <= L; ++lag) {
    const double w = 1.0 / std::pow(lag * u.dt, ha);
    for (int l = 0; l + lag <= L; ++l) {
      const Field& a = u.slices[l];
      const Field& b = u.slices[l + lag];
      for (int i = 0; i <= m; ++i) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) {
          const double d = b.at(i, c) - a.at(i, c);
          s += d * d;
        }
        time = std::max(time, std::sqrt(s) * w);
      }
    }
  }
  return std::max(space, time);
}

double parabolic_holder(const SpaceTimeField& u, double alpha) {
  double sup = 0.0;
  for (const Field& s : u.slices) sup = std::max(sup, s.sup_norm());
  return parabolic_holder_seminorm(u, alpha) + sup;
}

double parabolic_holder_dyadic(const SpaceTimeField& u, double alpha) {
  const int L = u.steps();
  const int m = u.grid().m;
  const int n = u.dim();
  double sup = 0.0, space = 0.0, time = 0.0;
  for (const Field& s : u.slices) {
    sup = std::max(sup, s.sup_norm());
    space = std::max(space, holder_seminorm_dyadic(s, alpha));
  }
  const double ha = alpha / 2.0;
  for (int lag = 1; lag <= L; lag <<= 1) {
    const double w = 1.0 / std::pow(lag * u.dt, ha);
    for (int l = 0; l + lag <= L; ++l) {
      const Field& a = u.slices[l];
      const Field& b = u.slices[l + lag];
      for (int i = 0; i <= m; ++i) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) {
          const double d = b.at(i, c) - a.at(i, c);
          s += d * d;
        }
        time = std::max(time, std::sqrt(s) * w);
      }
    }
  }
  return sup + std::max(space, time);
}

ExponentFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  ExponentFit fit;
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size()) {
    fit.undefined = true;
    return fit;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      fit.undefined = true;
      return fit;
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::fabs(det) < 1e-300) {
    fit.undefined = true;
    return fit;
  }
  fit.slope = (n * sxy - sx * sy) / det;
  const double icpt = (sy - fit.slope * sx) / n;
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = ly[i] - (icpt + fit.slope * lx[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

namespace {

ExponentFit exponent_from_max_increments(const std::function<double(int)>& max_inc,
                                         int npts, double spacing, int k_lo, int k_hi) {
  int kmax_fit = 0;
  while ((2 << kmax_fit) <= npts / 2) ++kmax_fit;  // largest k with lag 2^k <= npts/4-ish
  if (k_hi < 0 || k_hi > kmax_fit) k_hi = kmax_fit;
  std::vector<double> lags, incs;
  for (int k = k_lo; k <= k_hi; ++k) {
    const int lag = 1 << k;
    if (lag > npts / 2) break;
    const double v = max_inc(lag);
    if (v <= 0.0) {
      ExponentFit f;
      f.undefined = true;
      return f;
    }
    lags.push_back(lag * spacing);
    incs.push_back(v);
  }
  if (lags.size() < 3) {
    ExponentFit f;
    f.undefined = true;
    return f;
  }
  return fit_loglog(lags, incs);
}

}  // namespace

ExponentFit estimate_holder_exponent(const Field& f, int k_lo, int k_hi) {
  const int m = f.grid().m;
  if (m < 64 || !is_pow2(m))
    throw std::invalid_argument("estimate_holder_exponent: m must be a power of two >= 64");
  const int n = f.dim();
  auto max_inc = [&](int lag) {
    double best = 0.0;
    for (int i = 0; i + lag <= m; ++i) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) {
        const double d = f.at(i + lag, c) - f.at(i, c);
        s += d * d;
      }
      best = std::max(best, s);
    }
    return std::sqrt(best);
  };
  return exponent_from_max_increments(max_inc, m, f.grid().h(), k_lo, k_hi);
}

ExponentFit estimate_exponent_series(std::span<const double> f, double spacing,
                                     int k_lo, int k_hi) {
  const int npts = static_cast<int>(f.size()) - 1;
  if (npts < 64) throw std::invalid_argument("estimate_exponent_series: need >= 65 samples");
  auto max_inc = [&](int lag) {
    double best = 0.0;
    for (int i = 0; i + lag <= npts; ++i)
      best = std::max(best, std::fabs(f[i + lag] - f[i]));
    return best;
  };
  return exponent_from_max_increments(max_inc, npts, spacing, k_lo, k_hi);
}

GrrResult grr_bound(const TwoPointField& R, int p, double alpha) {
  if (p < 2) throw std::invalid_argument("grr_bound: p >= 2 required");
  const double expo = alpha + 2.0 / p;
  if (!(alpha > 0.0) || expo >= 1.0)
    throw std::invalid_argument("grr_bound: need alpha > 0 and alpha + 2/p < 1");
  const int m = R.grid().m;
  const double h = R.grid().h();
  const auto w = [&](double r) { return std::pow(r, expo); };

  // U: trapezoid over [0,1]^2 of (|R(x,y)| / w(|x-y|/4))^p, diagonal -> 0.
  double U = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double wi = (i == 0 || i == m) ? 0.5 : 1.0;
    for (int j = 0; j <= m; ++j) {
      if (i == j) continue;
      const double wj = (j == 0 || j == m) ? 0.5 : 1.0;
      const int a = std::min(i, j), b = std::max(i, j);
      const double d = (b - a) * h;
      U += wi * wj * std::pow(R.magnitude(a, b) / w(d / 4.0), p) * h * h;
    }
  }

  // C from the N-side: smallest constant with
  // sup_{[x,y]} |NR| <= (C/|y-x|^2)^{1/p} * w(|y-x|/4).
  // T(i,j) = max |NR(u,v,j)| over i<=u<=v<=j, M(i,j) = max over triples in [i,j].
  std::vector<double> T(static_cast<size_t>(m + 1) * (m + 1), 0.0);
  std::vector<double> M(static_cast<size_t>(m + 1) * (m + 1), 0.0);
  std::vector<double> buf(R.payload());
  auto idx = [&](int i, int j) { return static_cast<size_t>(i) * (m + 1) + j; };
  for (int j = 0; j <= m; ++j) {
    for (int i = j; i >= 0; --i) {
      double t = (i < j) ? T[idx(i + 1, j)] : 0.0;
      for (int v = i; v <= j; ++v) {
        n_apply(R, i, v, j, buf);
        double s = 0.0;
        for (double x : buf) s += x * x;
        t = std::max(t, std::sqrt(s));
      }
      T[idx(i, j)] = t;
      const double prev = (i < j) ? M[idx(i, j - 1)] : 0.0;
      M[idx(i, j)] = std::max(prev, t);
    }
  }
  double C = 0.0;
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) {
      const double d = (j - i) * h;
      const double ratio = M[idx(i, j)] / w(d / 4.0);
      C = std::max(C, std::pow(ratio, p) * d * d);
    }

  // Pointwise bound: 16 * (U^{1/p} + C^{1/p}) * int_0^d r^{-2/p} dw(r),
  // integrated on sigma-graded nodes (r = d s^{2}) to tame r^{alpha-1}.
  GrrResult res;
  res.U = U;
  res.C = C;
  res.bound = TwoPointField(R.grid(), 1);
  const double amp = 16.0 * (std::pow(U, 1.0 / p) + std::pow(C, 1.0 / p));
  const int J = 200;
  auto bound_at = [&](double d) {
    // integrand r^{-2/p} dw(r) = expo * r^{alpha-1} dr, on r = d s^2 nodes
    double s = 0.0;
    for (int q = 1; q <= J; ++q) {
      const double s0 = static_cast<double>(q - 1) / J;
      const double s1 = static_cast<double>(q) / J;
      const double smid = 0.5 * (s0 + s1);
      const double r = d * smid * smid;
      const double drds = 2.0 * d * smid;
      s += expo * std::pow(r, alpha - 1.0) * drds * (s1 - s0);
    }
    return amp * s;
  };
  std::vector<double> bound_by_lag(m + 1, 0.0);
  for (int lag = 1; lag <= m; ++lag) bound_by_lag[lag] = bound_at(lag * h);
  double worst = 0.0;
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) {
      const double b = bound_by_lag[j - i];
      res.bound.pair(i, j)[0] = b;
      const double mag = R.magnitude(i, j);
      if (b > 0.0) worst = std::max(worst, mag / b);
      else if (mag > 0.0) worst = std::max(worst, 1e300);
    }
  res.worst_ratio = worst;
  res.violated = worst > 1.05;
  return res;
}

}  // namespace rough
