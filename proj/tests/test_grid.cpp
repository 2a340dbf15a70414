#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "roughburgers/grid.hpp"
#include "roughburgers/io.hpp"
#include "roughburgers/rng.hpp"

using namespace rough;

namespace {
constexpr double kPi = std::numbers::pi;

Field random_field(SpatialGrid g, int dim, std::uint64_t seed) {
  CounterRng rng(seed);
  Field f(g, dim);
  for (int i = 0; i < g.m; ++i)
    for (int c = 0; c < dim; ++c) f.at(i, c) = rng.gaussian(77, i, c);
  f.close_periodic();
  return f;
}
}  // namespace

TEST_CASE("delta of a constant vanishes") {
  SpatialGrid g(16);
  Field f(g, 2);
  for (int i = 0; i <= 16; ++i) {
    f.at(i, 0) = 3.5;
    f.at(i, 1) = -1.25;
  }
  TwoPointField R = delta(f);
  for (int i = 0; i <= 16; ++i)
    for (int j = i; j <= 16; ++j) CHECK(R.magnitude(i, j) == 0.0);
}

TEST_CASE("delta of the identity path") {
  SpatialGrid g(4);
  Field f = Field::sampled_scalar(g, [](double x) { return x; });
  TwoPointField R = delta(f);
  CHECK(R.value(0, 2) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("delta of sin(2 pi x) on m=8") {
  SpatialGrid g(8);
  Field f = Field::sampled_scalar(g, [](double x) { return std::sin(2.0 * kPi * x); });
  // sin(pi/2) - sin(0) = 1
  CHECK(delta(f).value(0, 2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("N annihilates delta exactly") {
  SpatialGrid g(32);
  Field f = random_field(g, 2, 42);
  CHECK(n_max_abs(delta(f)) <= 1e-13);
}

TEST_CASE("N of the zero field") {
  SpatialGrid g(8);
  TwoPointField R(g, 1);
  CHECK(n_max_abs(R) == 0.0);
}

TEST_CASE("N of R(x,y) = (y-x)^2 equals 2(y-x)(z-y)") {
  SpatialGrid g(16);
  TwoPointField R(g, 1);
  for (int i = 0; i <= 16; ++i)
    for (int j = i; j <= 16; ++j) {
      const double d = (j - i) * g.h();
      R.pair(i, j)[0] = d * d;
    }
  double buf[1];
  for (int i = 0; i <= 16; ++i)
    for (int j = i; j <= 16; ++j)
      for (int k = j; k <= 16; ++k) {
        n_apply(R, i, j, k, buf);
        const double want = 2.0 * (j - i) * g.h() * (k - j) * g.h();
        CHECK(buf[0] == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("holder_seminorm basics") {
  SpatialGrid g(64);
  Field c(g, 1);
  for (int i = 0; i <= 64; ++i) c.at(i) = 2.0;
  CHECK(holder_seminorm(c, 0.5) == 0.0);

  Field id = Field::sampled_scalar(g, [](double x) { return x; });
  CHECK(holder_seminorm(id, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  auto arg = holder_seminorm_argmax(id, 0.5);
  CHECK(arg.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(arg.i == 0);
  CHECK(arg.j == 64);

  CHECK_THROWS_AS(holder_seminorm(id, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(holder_seminorm(id, 1.5), std::invalid_argument);
}

TEST_CASE("holder seminorm is absolutely homogeneous") {
  SpatialGrid g(32);
  Field f = random_field(g, 1, 7);
  Field f3 = f;
  f3 *= -3.0;
  CHECK(holder_seminorm(f3, 0.4) == doctest::Approx(3.0 * holder_seminorm(f, 0.4)).epsilon(1e-15));
}

TEST_CASE("two_point_norm agrees with holder_seminorm on delta") {
  SpatialGrid g(32);
  Field f = random_field(g, 1, 9);
  CHECK(two_point_norm(delta(f), 0.4) == doctest::Approx(holder_seminorm(f, 0.4)).epsilon(1e-15));
  CHECK_THROWS_AS(two_point_norm(delta(f), 2.5), std::invalid_argument);

  TwoPointField zero(g, 1);
  CHECK(two_point_norm(zero, 1.0) == 0.0);
}

TEST_CASE("two_point_norm of (y-x)^2 at gamma = 2 is 1") {
  SpatialGrid g(16);
  TwoPointField R(g, 1);
  for (int i = 0; i <= 16; ++i)
    for (int j = i; j <= 16; ++j) {
      const double d = (j - i) * g.h();
      R.pair(i, j)[0] = d * d;
    }
  CHECK(two_point_norm(R, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ratio monotonicity at the maximizing pair") {
  // for distances <= 1, the maximizing pair's ratio at gamma2 dominates the
  // gamma1 ratio when gamma1 < gamma2
  SpatialGrid g(32);
  Field f = random_field(g, 1, 13);
  TwoPointField R = delta(f);
  const double g1 = 0.3, g2 = 0.6;
  double best1 = 0.0;
  int bi = 0, bj = 1;
  for (int i = 0; i <= 32; ++i)
    for (int j = i + 1; j <= 32; ++j) {
      const double d = (j - i) * g.h();
      const double r = R.magnitude(i, j) / std::pow(d, g1);
      if (r > best1) {
        best1 = r;
        bi = i;
        bj = j;
      }
    }
  const double d = (bj - bi) * g.h();
  CHECK(R.magnitude(bi, bj) / std::pow(d, g2) >= best1 * (1.0 - 1e-12));
}

TEST_CASE("parabolic holder norm examples") {
  SpatialGrid g(16);
  SUBCASE("constant field") {
    SpaceTimeField u(g, 1, 0.1, 4);
    for (auto& s : u.slices)
      for (int i = 0; i <= 16; ++i) s.at(i) = -2.5;
    CHECK(parabolic_holder(u, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
  }
  SUBCASE("u(t,x) = x") {
    SpaceTimeField u(g, 1, 0.1, 4);
    for (auto& s : u.slices)
      for (int i = 0; i <= 16; ++i) s.at(i) = g.point(i);
    CHECK(parabolic_holder(u, 0.5) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("u(t,x) = t") {
    const double T = 0.4;
    SpaceTimeField u(g, 1, 0.1, 4);
    for (int l = 0; l <= 4; ++l)
      for (int i = 0; i <= 16; ++i) u.slices[l].at(i) = u.time(l);
    const double alpha = 0.5;
    CHECK(parabolic_holder_seminorm(u, alpha) ==
          doctest::Approx(std::pow(T, 1.0 - alpha / 2.0)).epsilon(1e-13));
  }
  SUBCASE("degenerate grids rejected") {
    CHECK_THROWS_AS(parabolic_holder(SpaceTimeField(), 0.4), std::invalid_argument);
  }
}

TEST_CASE("holder exponent estimate") {
  SpatialGrid g(1 << 8);
  SUBCASE("linear path has slope 1") {
    Field f = Field::sampled_scalar(g, [](double x) { return x; });
    auto fit = estimate_holder_exponent(f);
    CHECK_FALSE(fit.undefined);
    CHECK(std::fabs(fit.slope - 1.0) <= 0.01);
  }
  SUBCASE("constant path flagged") {
    Field f(g, 1);
    auto fit = estimate_holder_exponent(f);
    CHECK(fit.undefined);
  }
  SUBCASE("non power of two rejected") {
    Field f(SpatialGrid(100), 1);
    CHECK_THROWS_AS(estimate_holder_exponent(f), std::invalid_argument);
  }
}

TEST_CASE("grr bound") {
  SUBCASE("zero field") {
    SpatialGrid g(64);
    TwoPointField R(g, 1);
    auto res = grr_bound(R, 8, 0.3);
    CHECK(res.U == 0.0);
    CHECK_FALSE(res.violated);
  }
  SUBCASE("delta of a Lipschitz path is not violated, m in {64, 256}") {
    for (int m : {64, 256}) {
      SpatialGrid g(m);
      Field f = Field::sampled_scalar(g, [](double x) { return std::sin(2.0 * kPi * x); });
      auto res = grr_bound(delta(f), 8, 0.3);
      CHECK_FALSE(res.violated);
      CHECK(res.worst_ratio > 0.0);
    }
  }
  SUBCASE("parameter validation") {
    SpatialGrid g(16);
    TwoPointField R(g, 1);
    CHECK_THROWS_AS(grr_bound(R, 1, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(grr_bound(R, 2, 0.5), std::invalid_argument);  // alpha + 2/p >= 1
  }
}

TEST_CASE("field CSV round trip") {
  SpatialGrid g(8);
  Field f = random_field(g, 2, 5);
  Field back = field_from_csv(field_to_csv(f));
  REQUIRE(back.grid().m == 8);
  REQUIRE(back.dim() == 2);
  for (int i = 0; i <= 8; ++i)
    for (int c = 0; c < 2; ++c) CHECK(back.at(i, c) == f.at(i, c));
}
