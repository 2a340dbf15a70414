#include "roughburgers/rough_path.hpp"

#include <cmath>
#include <stdexcept>

namespace rough {

RoughPath::RoughPath(Field base, std::vector<double> cell_iterated)
    : base_(std::move(base)), cells_(std::move(cell_iterated)) {
  const size_t want = static_cast<size_t>(base_.grid().m) * base_.dim() * base_.dim();
  if (cells_.size() != want)
    throw std::invalid_argument("RoughPath: cell buffer size mismatch");
  if (!base_.all_finite()) throw std::invalid_argument("RoughPath: non-finite base");
  build_prefixes();
}

RoughPath RoughPath::lift_piecewise_linear(const Field& f) {
  const int m = f.grid().m;
  const int n = f.dim();
  std::vector<double> cells(static_cast<size_t>(m) * n * n);
  for (int i = 0; i < m; ++i) {
    for (int a = 0; a < n; ++a) {
      const double da = f.at(i + 1, a) - f.at(i, a);
      for (int b = 0; b < n; ++b) {
        const double db = f.at(i + 1, b) - f.at(i, b);
        cells[(static_cast<size_t>(i) * n + a) * n + b] = 0.5 * da * db;
      }
    }
  }
  return RoughPath(f, std::move(cells));
}

std::span<const double> RoughPath::cell(int i) const {
  const int n = base_.dim();
  return {cells_.data() + static_cast<size_t>(i) * n * n, static_cast<size_t>(n) * n};
}

void RoughPath::build_prefixes() {
  const int m = base_.grid().m;
  const int n = base_.dim();
  const size_t nn = static_cast<size_t>(n) * n;
  pref_cell_.assign((m + 1) * nn, 0.0);
  pref_xdx_.assign((m + 1) * nn, 0.0);
  for (int i = 0; i < m; ++i) {
    for (size_t e = 0; e < nn; ++e)
      pref_cell_[(i + 1) * nn + e] = pref_cell_[i * nn + e] + cells_[i * nn + e];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double v = base_.at(i, a) * (base_.at(i + 1, b) - base_.at(i, b));
        pref_xdx_[(i + 1) * nn + a * n + b] = pref_xdx_[i * nn + a * n + b] + v;
      }
  }
}

void RoughPath::chen_query(int i, int j, std::span<double> out) const {
  const int n = base_.dim();
  const size_t nn = static_cast<size_t>(n) * n;
  if (i > j || i < 0 || j > base_.grid().m)
    throw std::out_of_range("chen_query: need 0 <= i <= j <= m");
  // XX(i,j) = sum cells + sum_k (X(k)-X(i)) (x) dX(k,k+1)
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const size_t e = static_cast<size_t>(a) * n + b;
      const double cellsum = pref_cell_[j * nn + e] - pref_cell_[i * nn + e];
      const double xdx = pref_xdx_[j * nn + e] - pref_xdx_[i * nn + e];
      const double corr = base_.at(i, a) * (base_.at(j, b) - base_.at(i, b));
      out[e] = cellsum + xdx - corr;
    }
}

Matrix RoughPath::chen_query(int i, int j) const {
  const int n = base_.dim();
  Matrix out(n, n);
  chen_query(i, j, {out.data(), static_cast<size_t>(n) * n});
  return out;
}

RoughPath RoughPath::modify_levy_area(const Matrix& a) const {
  const int m = base_.grid().m;
  const int n = base_.dim();
  if (a.rows() != n || a.cols() != n)
    throw std::invalid_argument("modify_levy_area: a must be n x n");
  const double h = base_.grid().h();
  std::vector<double> cells = cells_;
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        cells[(static_cast<size_t>(i) * n + r) * n + c] += h * a(r, c);
  return RoughPath(base_, std::move(cells));
}

double RoughPath::chen_residual() const {
  const int m = base_.grid().m;
  const int n = base_.dim();
  const size_t nn = static_cast<size_t>(n) * n;
  const int stride = (m <= 96) ? 1 : (m + 95) / 96;  // ~96 nodes per axis
  std::vector<double> xij(nn), xjk(nn), xik(nn);
  double best = 0.0;
  for (int i = 0; i <= m; i += stride)
    for (int j = i; j <= m; j += stride) {
      chen_query(i, j, xij);
      for (int k = j; k <= m; k += stride) {
        chen_query(j, k, xjk);
        chen_query(i, k, xik);
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            const size_t e = static_cast<size_t>(a) * n + b;
            const double lhs = xik[e] - xij[e] - xjk[e];
            const double rhs = (base_.at(j, a) - base_.at(i, a)) *
                               (base_.at(k, b) - base_.at(j, b));
            const double d = lhs - rhs;
            s += d * d;
          }
        best = std::max(best, s);
      }
    }
  return std::sqrt(best);
}

double RoughPath::two_level_norm(double two_alpha) const {
  if (!(two_alpha > 0.0 && two_alpha <= 2.0))
    throw std::invalid_argument("two_level_norm: exponent in (0,2]");
  const int m = base_.grid().m;
  const int n = base_.dim();
  const size_t nn = static_cast<size_t>(n) * n;
  const double h = base_.grid().h();
  std::vector<double> buf(nn);
  double best = 0.0;
  for (int lag = 1; lag <= m; ++lag) {
    const double w = 1.0 / std::pow(lag * h, two_alpha);
    for (int i = 0; i + lag <= m; ++i) {
      chen_query(i, i + lag, buf);
      double s = 0.0;
      for (double x : buf) s += x * x;
      best = std::max(best, std::sqrt(s) * w);
    }
  }
  return best;
}

double RoughPath::two_level_norm_dyadic(double two_alpha) const {
  const int m = base_.grid().m;
  const int n = base_.dim();
  const size_t nn = static_cast<size_t>(n) * n;
  const double h = base_.grid().h();
  std::vector<double> buf(nn);
  double best = 0.0;
  for (int lag = 1; lag <= m; lag <<= 1) {
    const double w = 1.0 / std::pow(lag * h, two_alpha);
    for (int i = 0; i + lag <= m; ++i) {
      chen_query(i, i + lag, buf);
      double s = 0.0;
      for (double x : buf) s += x * x;
      best = std::max(best, std::sqrt(s) * w);
    }
  }
  return best;
}

double RoughPath::geometricity_defect() const {
  const int m = base_.grid().m;
  const int n = base_.dim();
  const size_t nn = static_cast<size_t>(n) * n;
  std::vector<double> buf(nn);
  double best = 0.0;
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) {
      chen_query(i, j, buf);
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double sym = 0.5 * (buf[static_cast<size_t>(a) * n + b] +
                                    buf[static_cast<size_t>(b) * n + a]);
          const double want = 0.5 * (base_.at(j, a) - base_.at(i, a)) *
                              (base_.at(j, b) - base_.at(i, b));
          const double d = sym - want;
          s += d * d;
        }
      best = std::max(best, std::sqrt(s));
    }
  return best;
}

ControlledPath::ControlledPath(std::shared_ptr<const RoughPath> ref, Field y, Field yprime)
    : ref_(std::move(ref)), y_(std::move(y)), yp_(std::move(yprime)) {
  if (!ref_) throw std::invalid_argument("ControlledPath: null reference");
  const int n = ref_->n();
  if (y_.grid() != ref_->base().grid() || yp_.grid() != y_.grid())
    throw std::invalid_argument("ControlledPath: grid mismatch");
  if (yp_.dim() != y_.dim() * n)
    throw std::invalid_argument("ControlledPath: yprime must have dim p*n");
}

ControlledPath make_controlled(Field y, Field yprime,
                               std::shared_ptr<const RoughPath> rp) {
  return ControlledPath(std::move(rp), std::move(y), std::move(yprime));
}

TwoPointField ControlledPath::remainder() const {
  const int m = y_.grid().m;
  const int p = y_.dim();
  const int n = ref_->n();
  const Field& X = ref_->base();
  TwoPointField R(y_.grid(), p);
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) {
      auto out = R.pair(i, j);
      for (int a = 0; a < p; ++a) {
        double s = y_.at(j, a) - y_.at(i, a);
        for (int c = 0; c < n; ++c)
          s -= yp_.at(i, a * n + c) * (X.at(j, c) - X.at(i, c));
        out[a] = s;
      }
    }
  return R;
}

namespace {

double remainder_norm_impl(const Field& y, const Field& yp, const Field& X,
                           int n, double two_alpha, bool dyadic) {
  const int m = y.grid().m;
  const int p = y.dim();
  const double h = y.grid().h();
  double best = 0.0;
  for (int lag = 1; lag <= m; dyadic ? (lag <<= 1) : ++lag) {
    const double w = 1.0 / std::pow(lag * h, two_alpha);
    for (int i = 0; i + lag <= m; ++i) {
      const int j = i + lag;
      double s = 0.0;
      for (int a = 0; a < p; ++a) {
        double r = y.at(j, a) - y.at(i, a);
        for (int c = 0; c < n; ++c)
          r -= yp.at(i, a * n + c) * (X.at(j, c) - X.at(i, c));
        s += r * r;
      }
      best = std::max(best, std::sqrt(s) * w);
    }
  }
  return best;
}

}  // namespace

double ControlledPath::remainder_norm(double two_alpha) const {
  return remainder_norm_impl(y_, yp_, ref_->base(), ref_->n(), two_alpha, false);
}
double ControlledPath::remainder_norm_dyadic(double two_alpha) const {
  return remainder_norm_impl(y_, yp_, ref_->base(), ref_->n(), two_alpha, true);
}

ControlledPath compose_smooth(const SmoothMap& g, const ControlledPath& psi,
                              const Field& w) {
  const int n = psi.reference()->n();
  const int d = g.d, p = g.p;
  if (psi.p() != d || w.dim() != d || w.grid() != psi.y().grid())
    throw std::invalid_argument("compose_smooth: dimension mismatch");
  const int m = w.grid().m;
  Field y(w.grid(), p);
  Field yp(w.grid(), p * n);
  std::vector<double> arg(d), val(p), jac(static_cast<size_t>(p) * d);
  for (int i = 0; i <= m; ++i) {
    for (int c = 0; c < d; ++c) arg[c] = psi.y().at(i, c) + w.at(i, c);
    g.value(arg, val);
    g.jacobian(arg, jac);
    for (int a = 0; a < p; ++a) y.at(i, a) = val[a];
    // Y'[a][c] = sum_e Dg[a][e] psi'[e][c]
    for (int a = 0; a < p; ++a)
      for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int e = 0; e < d; ++e)
          s += jac[static_cast<size_t>(a) * d + e] * psi.yprime().at(i, e * n + c);
        yp.at(i, a * n + c) = s;
      }
  }
  return ControlledPath(psi.reference(), std::move(y), std::move(yp));
}

RoughIntegralResult rough_integral(const ControlledPath& y, const ControlledPath& z) {
  if (y.reference() != z.reference())
    throw std::invalid_argument("rough_integral: mismatched reference rough paths");
  const RoughPath& rp = *y.reference();
  const int m = rp.cells();
  const int n = rp.n();
  const int p = y.p(), q = z.p();

  // per-cell compensated contributions
  std::vector<double> contrib(static_cast<size_t>(m) * p * q, 0.0);
  std::vector<double> first(static_cast<size_t>(m) * p * q, 0.0);
  for (int i = 0; i < m; ++i) {
    auto xx = rp.cell(i);  // exact: chen_query(i,i+1) == cell(i)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < q; ++b) {
        double t1 = y.y().at(i, a) * (z.y().at(i + 1, b) - z.y().at(i, b));
        double t2 = 0.0;
        for (int c = 0; c < n; ++c)
          for (int dd = 0; dd < n; ++dd)
            t2 += y.yprime().at(i, a * n + c) * xx[static_cast<size_t>(c) * n + dd] *
                  z.yprime().at(i, b * n + dd);
        first[(static_cast<size_t>(i) * p + a) * q + b] = t1;
        contrib[(static_cast<size_t>(i) * p + a) * q + b] = t1 + t2;
      }
  }

  RoughIntegralResult res;
  res.total = Matrix(p, q);
  res.total_first_order = Matrix(p, q);
  res.partials = TwoPointField(y.y().grid(), p * q);
  res.q_remainder = TwoPointField(y.y().grid(), p * q);

  // prefix sums give all interval integrals
  std::vector<double> pref(static_cast<size_t>(m + 1) * p * q, 0.0);
  for (int i = 0; i < m; ++i)
    for (int e = 0; e < p * q; ++e)
      pref[(i + 1) * static_cast<size_t>(p) * q + e] =
          pref[i * static_cast<size_t>(p) * q + e] + contrib[i * static_cast<size_t>(p) * q + e];
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < q; ++b) {
      res.total(a, b) = pref[static_cast<size_t>(m) * p * q + a * q + b];
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += first[(static_cast<size_t>(i) * p + a) * q + b];
      res.total_first_order(a, b) = s;
    }

  std::vector<double> xx(static_cast<size_t>(n) * n);
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) {
      auto part = res.partials.pair(i, j);
      auto qrem = res.q_remainder.pair(i, j);
      rp.chen_query(i, j, xx);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < q; ++b) {
          const int e = a * q + b;
          part[e] = pref[static_cast<size_t>(j) * p * q + e] -
                    pref[static_cast<size_t>(i) * p * q + e];
          // Q = partial - Y(x) dZ - Y' XX Z'^T  (third-order remainder)
          double lead = y.y().at(i, a) * (z.y().at(j, b) - z.y().at(i, b));
          for (int c = 0; c < n; ++c)
            for (int dd = 0; dd < n; ++dd)
              lead += y.yprime().at(i, a * n + c) * xx[static_cast<size_t>(c) * n + dd] *
                      z.yprime().at(i, b * n + dd);
          qrem[e] = part[e] - lead;
        }
    }
  return res;
}

Matrix rough_integral_total(const ControlledPath& y, const ControlledPath& z) {
  if (y.reference() != z.reference())
    throw std::invalid_argument("rough_integral: mismatched reference rough paths");
  const RoughPath& rp = *y.reference();
  const int m = rp.cells();
  const int n = rp.n();
  const int p = y.p(), q = z.p();
  Matrix total(p, q);
  for (int i = 0; i < m; ++i) {
    auto xx = rp.cell(i);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < q; ++b) {
        double t = y.y().at(i, a) * (z.y().at(i + 1, b) - z.y().at(i, b));
        for (int c = 0; c < n; ++c)
          for (int dd = 0; dd < n; ++dd)
            t += y.yprime().at(i, a * n + c) * xx[static_cast<size_t>(c) * n + dd] *
                 z.yprime().at(i, b * n + dd);
        total(a, b) += t;
      }
  }
  return total;
}

KernelWeightedIntegral kernel_weighted_rough_integral(
    const std::function<double(double)>& f, double f11, double lambda,
    double alpha, const ControlledPath& y, const ControlledPath& z) {
  if (lambda < 1.0)
    throw std::invalid_argument("kernel_weighted_rough_integral: lambda >= 1 required");
  const int m = y.y().grid().m;
  const int p = y.p();
  const int n = y.reference()->n();
  Field wy(y.y().grid(), p);
  Field wyp(y.y().grid(), p * n);
  for (int i = 0; i <= m; ++i) {
    const double fx = f(lambda * y.y().grid().point(i));
    for (int a = 0; a < p; ++a) wy.at(i, a) = fx * y.y().at(i, a);
    for (int c = 0; c < p * n; ++c) wyp.at(i, c) = fx * y.yprime().at(i, c);
  }
  ControlledPath folded(y.reference(), std::move(wy), std::move(wyp));
  KernelWeightedIntegral out;
  out.total = rough_integral_total(folded, z);
  out.magnitude = out.total.frobenius();
  const double denom = f11 * std::pow(lambda, -alpha);
  out.scaling_ratio = (denom > 0.0) ? out.magnitude / denom : 0.0;
  return out;
}

double fubini_discrepancy(const std::function<double(double, double)>& f,
                          int lambda_nodes, const ControlledPath& y,
                          const ControlledPath& z) {
  const int J = lambda_nodes;
  if (J < 2) throw std::invalid_argument("fubini_discrepancy: need >= 2 lambda nodes");
  const int m = y.y().grid().m;
  const int p = y.p();
  const int n = y.reference()->n();
  const double hl = 1.0 / (J - 1);

  // lhs: weight F(x) = trapz_lambda f(lambda, x) folded into Y
  Field wy(y.y().grid(), p), wyp(y.y().grid(), p * n);
  for (int i = 0; i <= m; ++i) {
    const double x = y.y().grid().point(i);
    double F = 0.0;
    for (int j = 0; j < J; ++j) {
      const double w = (j == 0 || j == J - 1) ? 0.5 * hl : hl;
      F += w * f(j * hl, x);
    }
    for (int a = 0; a < p; ++a) wy.at(i, a) = F * y.y().at(i, a);
    for (int c = 0; c < p * n; ++c) wyp.at(i, c) = F * y.yprime().at(i, c);
  }
  Matrix lhs = rough_integral_total(ControlledPath(y.reference(), std::move(wy), std::move(wyp)), z);

  Matrix rhs(lhs.rows(), lhs.cols());
  for (int j = 0; j < J; ++j) {
    const double lam = j * hl;
    Field fy(y.y().grid(), p), fyp(y.y().grid(), p * n);
    for (int i = 0; i <= m; ++i) {
      const double fx = f(lam, y.y().grid().point(i));
      for (int a = 0; a < p; ++a) fy.at(i, a) = fx * y.y().at(i, a);
      for (int c = 0; c < p * n; ++c) fyp.at(i, c) = fx * y.yprime().at(i, c);
    }
    Matrix term = rough_integral_total(ControlledPath(y.reference(), std::move(fy), std::move(fyp)), z);
    const double w = (j == 0 || j == J - 1) ? 0.5 * hl : hl;
    term *= w;
    rhs += term;
  }
  return (lhs - rhs).frobenius();
}

}  // namespace rough
