#include <cmath>

#include "doctest.h"
#include "ulalab/errors.hpp"
#include "ulalab/potentials.hpp"
#include "ulalab/rng.hpp"

using namespace ula;

namespace {

Vec random_point(RngStream& rng, int dim, double lo_r, double hi_r) {
  Vec x(dim);
  double n2 = 0;
  for (auto& v : x) {
    v = rng.normal();
    n2 += v * v;
  }
  const double r = lo_r + (hi_r - lo_r) * rng.uniform();
  for (auto& v : x) v *= r / std::sqrt(n2);
  return x;
}

Vec fd_gradient(const PotentialSpec& p, const Vec& x, double h) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (p.eval(xp) - p.eval(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

}  // namespace

TEST_CASE("eval_grad on the shipped potentials") {
  SUBCASE("quadratic") {
    auto p = make_quadratic(2.0, 1);
    auto [u, g] = eval_grad(p, {3.0});
    CHECK(u == doctest::Approx(9.0));
    CHECK(g[0] == doctest::Approx(6.0));
  }
  SUBCASE("mixture norm at a unit vector") {
    auto p = make_mixture_norm({{1.0, 3.0}}, 2);
    auto [u, g] = eval_grad(p, {1.0, 0.0});
    CHECK(u == doctest::Approx(1.0));
    CHECK(g[0] == doctest::Approx(3.0));
    CHECK(g[1] == doctest::Approx(0.0));
  }
  SUBCASE("linear tail at the origin") {
    auto p = make_linear_tail({1.0}, 3);
    auto [u, g] = eval_grad(p, {0.0, 0.0, 0.0});
    CHECK(u == doctest::Approx(1.0));
    for (double v : g) CHECK(v == 0.0);
  }
  SUBCASE("dimension mismatch") {
    auto p = make_quadratic(1.0, 2);
    CHECK_THROWS_AS(eval_grad(p, {1.0}), InvalidArgumentError);
  }
  SUBCASE("stationary point at zero") {
    for (auto& p : {make_quadratic(1.5, 3), make_mixture_norm({{1.0, 2.5}}, 3),
                    make_linear_tail({1.0, 2.0}, 3)}) {
      const Vec g = p.grad(Vec(3, 0.0));
      for (double v : g) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("gradients agree with central differences away from the origin") {
  RngStream rng(31337);
  auto check_fd = [&](const PotentialSpec& p) {
    for (int t = 0; t < 100; ++t) {
      const Vec x = random_point(rng, p.dim, 0.5, 5.0);
      const Vec g = p.grad(x);
      const Vec fd = fd_gradient(p, x, 1e-5);
      double err2 = 0, gn2 = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        err2 += (g[i] - fd[i]) * (g[i] - fd[i]);
        gn2 += g[i] * g[i];
      }
      CHECK(std::sqrt(err2) <= 1e-5 * (1.0 + std::sqrt(gn2)));
    }
  };
  check_fd(make_quadratic(2.0, 3));
  check_fd(make_mixture_norm({{1.0, 2.5}, {0.5, 3.0}}, 3));
  check_fd(make_linear_tail({1.0, 2.0}, 3));
}

TEST_CASE("analytic hessian action matches finite differences") {
  RngStream rng(77);
  auto p = make_mixture_norm({{1.0, 2.5}, {0.5, 3.0}}, 3);
  for (int t = 0; t < 50; ++t) {
    const Vec x = random_point(rng, 3, 0.5, 5.0);
    const Vec v = random_point(rng, 3, 0.5, 2.0);
    const Vec hv = p.hessian_vec(x, v);
    const Vec fd = fd_hessian_vec(p, x, v);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(hv[i] == doctest::Approx(fd[i]).epsilon(1e-4));
  }
}

TEST_CASE("mixture smoothness certifier") {
  SUBCASE("quadratic is 1-smooth with L=a") {
    auto p = make_quadratic(1.0, 3);
    auto rep = certify_mixture_smooth(p, 10000, 10.0, 11);
    CHECK(rep.passed);
    CHECK(rep.trials == 10000);
  }
  SUBCASE("mixture norm passes with the shipped constants") {
    auto p = make_mixture_norm({{1.0, 2.5}}, 3);
    auto rep = certify_mixture_smooth(p, 10000, 10.0, 12);
    CHECK(rep.passed);
    CHECK(!rep.notes.empty());  // constant provenance travels with the report
  }
  SUBCASE("an undersized constant fails with a witness") {
    auto p = make_quadratic(1.0, 3);
    auto rep = certify_mixture_smooth(p, SmoothnessClaim{{1.0}, {1e-3}, 0.0}, 10000,
                                      10.0, 13);
    CHECK(!rep.passed);
    CHECK(rep.worst_violation > 0.0);
    CHECK(rep.witness_x.size() == 3);
    CHECK(rep.witness_y.size() == 3);
  }
  SUBCASE("missing metadata is a configuration error") {
    auto p = make_zero(2);
    CHECK_THROWS_AS(certify_mixture_smooth(p, 10, 1.0, 1), ConfigError);
  }
}

TEST_CASE("dissipativity certifier") {
  SUBCASE("mixture norm with a = L alpha") {
    auto p = make_mixture_norm({{1.0, 3.0}}, 2);
    auto rep = certify_dissipative(p, DissipativityClaim{3.0, 3.0, 0.0}, 10000, 10.0, 21);
    CHECK(rep.passed);
  }
  SUBCASE("linear tail is 1-dissipative") {
    auto p = make_linear_tail({1.0}, 2);
    auto rep = certify_dissipative(p, DissipativityClaim{1.0, 1.0, 1.0}, 10000, 10.0, 22);
    CHECK(rep.passed);
  }
  SUBCASE("overclaimed a fails, the true a passes") {
    auto p = make_quadratic(1.0, 2);
    CHECK(!certify_dissipative(p, DissipativityClaim{2.0, 2.0, 0.0}, 10000, 10.0, 23)
               .passed);
    CHECK(certify_dissipative(p, DissipativityClaim{2.0, 1.0, 0.0}, 10000, 10.0, 24)
              .passed);
  }
}

TEST_CASE("hessian smoothness certifier") {
  SUBCASE("constant hessian passes any positive claim") {
    auto p = make_quadratic(1.0, 3);
    auto rep = certify_hessian_smooth(p, SmoothnessClaim{{0.37}, {1e-9}, 0.0}, 5000,
                                      10.0, 31);
    CHECK(rep.passed);
    CHECK(!rep.used_fd_hessian);
  }
  SUBCASE("mixture norm with the alpha-2 exponent") {
    auto p = make_mixture_norm({{1.0, 2.5}}, 3);
    auto rep = certify_hessian_smooth(p, 10000, 10.0, 32);
    CHECK(rep.passed);
  }
  SUBCASE("linear tail through the finite-difference fallback") {
    auto p = make_linear_tail({1.0}, 3);
    CHECK(!p.has_hessian_action());
    auto rep = certify_hessian_smooth(p, 5000, 10.0, 33);
    CHECK(rep.passed);
    CHECK(rep.used_fd_hessian);
  }
}

TEST_CASE("growth and descent bounds hold on the shipped potentials") {
  for (auto& p : {make_quadratic(1.0, 2), make_mixture_norm({{1.0, 2.5}, {0.5, 3.0}}, 2),
                  make_linear_tail({1.0}, 2)}) {
    CHECK(certify_gradient_growth(p, 10000, 10.0, 41).passed);
    CHECK(certify_descent_bound(p, 10000, 10.0, 42).passed);
  }
}

TEST_CASE("certifiers are deterministic given the seed") {
  auto p = make_mixture_norm({{1.0, 2.5}}, 2);
  auto a = certify_mixture_smooth(p, 2000, 10.0, 99);
  auto b = certify_mixture_smooth(p, 2000, 10.0, 99);
  CHECK(a.worst_slack == b.worst_slack);
  CHECK(a.witness_trial == b.witness_trial);
  auto c = certify_mixture_smooth(p, 2000, 10.0, 100);
  CHECK(a.worst_slack != c.worst_slack);
}

TEST_CASE("metadata validation rejects malformed claims") {
  RegularityMeta m;
  m.smooth_exponents = {0.8, 0.5};  // not ascending
  m.smooth_consts = {1.0, 1.0};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.smooth_exponents = {0.5, 0.8};
  m.smooth_consts = {1.0, -1.0};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.smooth_consts = {1.0, 1.0};
  m.dissipativity_beta = 2.0;  // a missing
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.dissipativity_a = 1.0;
  CHECK_NOTHROW(m.validate());
  CHECK_THROWS_AS(make_mixture_norm({{1.0, 3.5}}, 2), InvalidArgumentError);
  CHECK_THROWS_AS(make_mixture_norm({{-1.0, 2.5}}, 2), InvalidArgumentError);
  CHECK_THROWS_AS(make_linear_tail({0.5}, 2), InvalidArgumentError);
  CHECK_THROWS_AS(make_quadratic(0.0, 2), InvalidArgumentError);
}
