#include "ulalab/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ulalab/errors.hpp"
#include "ulalab/rng.hpp"

namespace ula {

namespace {

constexpr double kCertTol = 1e-8;    // absorbs float noise: lhs - rhs <= tol*(1+rhs)
constexpr double kFdCertTol = 1e-3;  // widened when the Hessian action is finite-difference
constexpr double kFdHessStep = 1e-4;

void require_dim(const PotentialSpec& p, const Vec& x) {
  if (static_cast<int>(x.size()) != p.dim)
    throw InvalidArgumentError("point has dimension " + std::to_string(x.size()) +
                               ", potential expects " + std::to_string(p.dim));
}

void require_ascending_positive(const std::vector<double>& exps,
                                const std::vector<double>& consts,
                                double lo_exp, const char* what) {
  if (exps.size() != consts.size())
    throw ConfigError(std::string(what) + " exponent/constant lists differ in length");
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i] < lo_exp || exps[i] > 1.0)
      throw ConfigError(std::string(what) + " exponent out of range");
    if (i > 0 && exps[i] < exps[i - 1])
      throw ConfigError(std::string(what) + " exponents must be ascending");
    if (consts[i] <= 0.0)
      throw ConfigError(std::string(what) + " constants must be positive");
  }
}

// Uniform point in the ball of the given radius; a 20% slice of trials is
// pushed into the outer 0.9..1.0 shell.
Vec ball_point(RngStream& rng, int dim, double radius, bool shell) {
  Vec x(dim);
  double n2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    x[i] = rng.normal();
    n2 += x[i] * x[i];
  }
  double n = std::sqrt(n2);
  if (n == 0.0) n = 1.0;
  double r;
  if (shell) {
    r = radius * (0.9 + 0.1 * rng.uniform());
  } else {
    r = radius * std::pow(rng.uniform(), 1.0 / dim);
  }
  for (int i = 0; i < dim; ++i) x[i] *= r / n;
  return x;
}

// An inequality lhs <= rhs passes a trial if lhs - rhs <= tol*(1+|rhs|).
// The witness is the trial with the largest tolerance-adjusted violation.
struct WorstCase {
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_adjusted = -std::numeric_limits<double>::infinity();
  double worst_violation = 0.0;
  std::size_t trial = 0;
  Vec x, y, v;

  void update(double lhs, double rhs, double tol, std::size_t t, const Vec& px,
              const Vec& py, const Vec* pv = nullptr) {
    worst_slack = std::min(worst_slack, rhs - lhs);
    const double adjusted = (lhs - rhs) - tol * (1.0 + std::abs(rhs));
    if (adjusted > worst_adjusted) {
      worst_adjusted = adjusted;
      worst_violation = std::max(0.0, lhs - rhs);
      trial = t;
      x = px;
      y = py;
      if (pv) v = *pv;
    }
  }
};

CertificateReport finish(const char* check, std::size_t trials, const WorstCase& w,
                         const std::string& notes, bool used_fd = false) {
  CertificateReport rep;
  rep.check = check;
  rep.trials = trials;
  rep.worst_slack = w.worst_slack;
  rep.worst_violation = w.worst_violation;
  rep.witness_trial = w.trial;
  rep.witness_x = w.x;
  rep.witness_y = w.y;
  rep.witness_v = w.v;
  rep.used_fd_hessian = used_fd;
  rep.notes = notes;
  rep.passed = w.worst_adjusted <= 0.0;
  return rep;
}

}  // namespace

void RegularityMeta::validate() const {
  if (!smooth_exponents.empty())
    require_ascending_positive(smooth_exponents, smooth_consts, 1e-12, "smoothness");
  if (local_power < 0.0) throw ConfigError("local power must be >= 0");
  if (!hessian_exponents.empty())
    require_ascending_positive(hessian_exponents, hessian_consts, 0.0, "hessian smoothness");
  if (hessian_local_power < 0.0) throw ConfigError("hessian local power must be >= 0");
  if (dissipativity_beta != 0.0 || dissipativity_a != 0.0) {
    if (dissipativity_beta <= 0.0 || dissipativity_a <= 0.0 || dissipativity_b < 0.0)
      throw ConfigError("dissipativity needs beta > 0, a > 0, b >= 0");
  }
  if (poincare_gamma && *poincare_gamma <= 0.0)
    throw ConfigError("poincare gamma must be positive");
}

double RegularityMeta::max_smooth_const() const {
  double m = 0.0;
  for (double c : smooth_consts) m = std::max(m, c);
  return m;
}

double RegularityMeta::smoothing_const() const { return std::max(1.0, max_smooth_const()); }

std::pair<double, Vec> eval_grad(const PotentialSpec& p, const Vec& x) {
  require_dim(p, x);
  return {p.eval(x), p.grad(x)};
}

PotentialSpec make_mixture_norm(const std::vector<std::pair<double, double>>& terms,
                                int dim) {
  if (dim < 1) throw InvalidArgumentError("dim must be >= 1");
  if (terms.empty()) throw InvalidArgumentError("mixture_norm needs at least one term");
  for (auto& [L, alpha] : terms) {
    if (L <= 0.0) throw InvalidArgumentError("mixture_norm weights must be positive");
    if (alpha <= 2.0 || alpha > 3.0)
      throw InvalidArgumentError("mixture_norm exponents must lie in (2,3]");
  }
  auto sorted = terms;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });

  PotentialSpec p;
  p.dim = dim;
  p.name = "mixture_norm";
  p.eval = [sorted](const Vec& x) {
    const double r = norm2(x);
    double u = 0.0;
    for (auto& [L, alpha] : sorted) u += L * std::pow(r, alpha);
    return u;
  };
  p.grad = [sorted, dim](const Vec& x) {
    const double r = norm2(x);
    Vec g(dim, 0.0);
    if (r == 0.0) return g;  // stationary point; also the subgradient choice
    double c = 0.0;
    for (auto& [L, alpha] : sorted) c += L * alpha * std::pow(r, alpha - 2.0);
    for (int i = 0; i < dim; ++i) g[i] = c * x[i];
    return g;
  };
  p.grad_into = [sorted, dim](const Vec& x, Vec& g) {
    g.assign(dim, 0.0);
    const double r = norm2(x);
    if (r == 0.0) return;
    double c = 0.0;
    for (auto& [L, alpha] : sorted) c += L * alpha * std::pow(r, alpha - 2.0);
    for (int i = 0; i < dim; ++i) g[i] = c * x[i];
  };
  p.hessian_vec = [sorted, dim](const Vec& x, const Vec& v) {
    // H = sum L a [ r^(a-2) I + (a-2) r^(a-4) x x^T ]
    const double r = norm2(x);
    Vec hv(dim, 0.0);
    if (r == 0.0) return hv;  // limit is 0 for every alpha > 2
    double ci = 0.0, cx = 0.0;
    for (auto& [L, alpha] : sorted) {
      ci += L * alpha * std::pow(r, alpha - 2.0);
      cx += L * alpha * (alpha - 2.0) * std::pow(r, alpha - 4.0);
    }
    const double xv = dot(x, v);
    for (int i = 0; i < dim; ++i) hv[i] = ci * v[i] + cx * xv * x[i];
    return hv;
  };

  RegularityMeta m;
  const double alpha_max = sorted.back().second;
  for (auto& [L, alpha] : sorted) {
    m.smooth_exponents.push_back((alpha - 1.0) / 3.0);
    m.smooth_consts.push_back(8.0 * L * alpha);
    m.hessian_exponents.push_back(alpha - 2.0);
    m.hessian_consts.push_back(L * (alpha - 1.0 + (alpha - 2.0) * std::pow(2.0, 6.0 - alpha)));
  }
  m.local_power = 2.0 * (alpha_max - 1.0) / 3.0;
  m.hessian_local_power = 0.0;
  m.dissipativity_beta = alpha_max;
  m.dissipativity_a = sorted.back().first * alpha_max;
  m.dissipativity_b = 0.0;
  m.notes =
      "gradient-smoothness constants 8*L_i*alpha_i with exponents (alpha_i-1)/3 and "
      "local power 2(alpha_N-1)/3 come from the n=3 radial split bound, whose stated "
      "validity range is alpha in (3,4]; the tighter n=2 form (constant 7*L_i*alpha_i, "
      "exponent (alpha_i-1)/2) covers alpha in (2,3]. The looser constants are shipped "
      "and verified statistically here.";
  m.validate();
  p.regularity = m;
  return p;
}

PotentialSpec make_linear_tail(const std::vector<double>& alphas, int dim) {
  if (dim < 1) throw InvalidArgumentError("dim must be >= 1");
  if (alphas.empty()) throw InvalidArgumentError("linear_tail needs at least one term");
  for (double a : alphas)
    if (a < 1.0) throw InvalidArgumentError("linear_tail exponents must be >= 1");
  auto sorted = alphas;
  std::sort(sorted.begin(), sorted.end());

  PotentialSpec p;
  p.dim = dim;
  p.name = "linear_tail";
  p.eval = [sorted](const Vec& x) {
    const double r = norm2(x);
    double u = 0.0;
    for (double a : sorted) u += std::pow(1.0 + std::pow(r, 1.0 + a), 1.0 / (1.0 + a));
    return u;
  };
  p.grad = [sorted, dim](const Vec& x) {
    const double r = norm2(x);
    Vec g(dim, 0.0);
    if (r == 0.0) return g;
    double c = 0.0;
    for (double a : sorted)
      c += std::pow(1.0 + std::pow(r, 1.0 + a), -a / (1.0 + a)) * std::pow(r, a - 1.0);
    for (int i = 0; i < dim; ++i) g[i] = c * x[i];
    return g;
  };
  p.grad_into = [sorted, dim](const Vec& x, Vec& g) {
    g.assign(dim, 0.0);
    const double r = norm2(x);
    if (r == 0.0) return;
    double c = 0.0;
    for (double a : sorted)
      c += std::pow(1.0 + std::pow(r, 1.0 + a), -a / (1.0 + a)) * std::pow(r, a - 1.0);
    for (int i = 0; i < dim; ++i) g[i] = c * x[i];
  };
  // No analytic Hessian action on purpose: this potential exercises the
  // finite-difference fallback of the Hessian certifier.

  RegularityMeta m;
  double lip = 0.0;
  for (double a : sorted) lip += 1.0 + a;  // per-term Hessian bound 1 + alpha_i
  m.smooth_exponents = {1.0};
  m.smooth_consts = {lip};
  m.local_power = 0.0;
  m.hessian_exponents = {0.0};  // bounded Hessian: difference <= 2*lip <= 3*lip
  m.hessian_consts = {lip};
  m.hessian_local_power = 0.0;
  m.dissipativity_beta = 1.0;
  m.dissipativity_a = 1.0;
  m.dissipativity_b = static_cast<double>(sorted.size());
  m.notes =
      "Lipschitz constant sum_i (1+alpha_i) bounds the Hessian term by term; the "
      "bounded-Hessian claim is encoded as exponent 0.";
  m.validate();
  p.regularity = m;
  return p;
}

PotentialSpec make_quadratic(double a, int dim) {
  if (dim < 1) throw InvalidArgumentError("dim must be >= 1");
  if (a <= 0.0) throw InvalidArgumentError("quadratic curvature must be positive");
  PotentialSpec p;
  p.dim = dim;
  p.name = "quadratic";
  p.eval = [a](const Vec& x) { return 0.5 * a * sq_norm2(x); };
  p.grad = [a, dim](const Vec& x) {
    Vec g(dim);
    for (int i = 0; i < dim; ++i) g[i] = a * x[i];
    return g;
  };
  p.grad_into = [a, dim](const Vec& x, Vec& g) {
    g.resize(dim);
    for (int i = 0; i < dim; ++i) g[i] = a * x[i];
  };
  p.hessian_vec = [a, dim](const Vec&, const Vec& v) {
    Vec hv(dim);
    for (int i = 0; i < dim; ++i) hv[i] = a * v[i];
    return hv;
  };
  RegularityMeta m;
  m.smooth_exponents = {1.0};
  m.smooth_consts = {a};
  m.local_power = 0.0;
  m.hessian_exponents = {1.0};
  m.hessian_consts = {a};
  m.dissipativity_beta = 2.0;
  m.dissipativity_a = a;
  m.dissipativity_b = 0.0;
  m.poincare_gamma = a;  // N(0, I/a)
  m.validate();
  p.regularity = m;
  return p;
}

PotentialSpec make_zero(int dim) {
  if (dim < 1) throw InvalidArgumentError("dim must be >= 1");
  PotentialSpec p;
  p.dim = dim;
  p.name = "zero";
  p.eval = [](const Vec&) { return 0.0; };
  p.grad = [dim](const Vec&) { return Vec(dim, 0.0); };
  p.grad_into = [dim](const Vec&, Vec& g) { g.assign(dim, 0.0); };
  p.hessian_vec = [dim](const Vec&, const Vec&) { return Vec(dim, 0.0); };
  return p;
}

Vec fd_hessian_vec(const PotentialSpec& p, const Vec& x, const Vec& v, double step) {
  const double vn = norm2(v);
  if (vn == 0.0) return Vec(x.size(), 0.0);
  Vec xp = x, xm = x;
  axpy(step / vn, v, xp);
  axpy(-step / vn, v, xm);
  Vec gp = p.grad(xp), gm = p.grad(xm);
  Vec hv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    hv[i] = (gp[i] - gm[i]) * vn / (2.0 * step);
  return hv;
}

CertificateReport certify_mixture_smooth(const PotentialSpec& p,
                                         const SmoothnessClaim& claim,
                                         std::size_t trials, double radius,
                                         std::uint64_t rng_seed) {
  if (trials < 1) throw InvalidArgumentError("trials must be >= 1");
  if (claim.exponents.empty()) throw ConfigError("no smoothness claim declared");
  RngStream rng(rng_seed);
  WorstCase w;
  for (std::size_t t = 0; t < trials; ++t) {
    const bool shell = (t % 5 == 4);
    Vec x = ball_point(rng, p.dim, radius, shell);
    Vec y = ball_point(rng, p.dim, radius, shell);
    const double lhs = norm2(sub(p.grad(x), p.grad(y)));
    const double nx = norm2(x), ny = norm2(y), dxy = norm2(sub(x, y));
    const double local =
        1.0 + std::pow(nx, claim.local_power) + std::pow(ny, claim.local_power);
    double holder = 0.0;
    for (std::size_t i = 0; i < claim.exponents.size(); ++i)
      holder += claim.consts[i] * std::pow(dxy, claim.exponents[i]);
    w.update(lhs, local * holder, kCertTol, t, x, y);
  }
  return finish("mixture_smooth", trials, w, p.regularity.notes);
}

CertificateReport certify_mixture_smooth(const PotentialSpec& p, std::size_t trials,
                                         double radius, std::uint64_t rng_seed) {
  if (!p.regularity.has_smoothness())
    throw ConfigError("potential declares no smoothness metadata");
  return certify_mixture_smooth(
      p,
      SmoothnessClaim{p.regularity.smooth_exponents, p.regularity.smooth_consts,
                      p.regularity.local_power},
      trials, radius, rng_seed);
}

CertificateReport certify_dissipative(const PotentialSpec& p,
                                      const DissipativityClaim& claim,
                                      std::size_t trials, double radius_max,
                                      std::uint64_t rng_seed) {
  if (trials < 1) throw InvalidArgumentError("trials must be >= 1");
  if (claim.beta <= 0.0 || claim.a <= 0.0)
    throw ConfigError("dissipativity claim needs beta > 0 and a > 0");
  RngStream rng(rng_seed);
  WorstCase w;
  for (std::size_t t = 0; t < trials; ++t) {
    const bool shell = (t % 5 == 4);
    Vec x = ball_point(rng, p.dim, radius_max, shell);
    // inequality flipped into lhs <= rhs form:
    //   a||x||^beta - b <= <grad U(x), x>
    const double lhs = claim.a * std::pow(norm2(x), claim.beta) - claim.b;
    const double rhs = dot(p.grad(x), x);
    w.update(lhs, rhs, kCertTol, t, x, x);
  }
  return finish("dissipative", trials, w, p.regularity.notes);
}

CertificateReport certify_dissipative(const PotentialSpec& p, std::size_t trials,
                                      double radius_max, std::uint64_t rng_seed) {
  if (!p.regularity.has_dissipativity())
    throw ConfigError("potential declares no dissipativity metadata");
  return certify_dissipative(p,
                             DissipativityClaim{p.regularity.dissipativity_beta,
                                                p.regularity.dissipativity_a,
                                                p.regularity.dissipativity_b},
                             trials, radius_max, rng_seed);
}

CertificateReport certify_hessian_smooth(const PotentialSpec& p,
                                         const SmoothnessClaim& claim,
                                         std::size_t trials, double radius,
                                         std::uint64_t rng_seed) {
  if (trials < 1) throw InvalidArgumentError("trials must be >= 1");
  if (claim.exponents.empty()) throw ConfigError("no hessian smoothness claim declared");
  const bool fd = !p.has_hessian_action();
  RngStream rng(rng_seed);
  WorstCase w;
  for (std::size_t t = 0; t < trials; ++t) {
    const bool shell = (t % 5 == 4);
    Vec x = ball_point(rng, p.dim, radius, shell);
    Vec y = ball_point(rng, p.dim, radius, shell);
    Vec v = ball_point(rng, p.dim, 1.0, true);
    Vec hx = fd ? fd_hessian_vec(p, x, v, kFdHessStep) : p.hessian_vec(x, v);
    Vec hy = fd ? fd_hessian_vec(p, y, v, kFdHessStep) : p.hessian_vec(y, v);
    const double lhs = norm2(sub(hx, hy));
    const double nx = norm2(x), ny = norm2(y), dxy = norm2(sub(x, y));
    const double local =
        1.0 + std::pow(nx, claim.local_power) + std::pow(ny, claim.local_power);
    double holder = 0.0;
    for (std::size_t i = 0; i < claim.exponents.size(); ++i)
      holder += claim.consts[i] * std::pow(dxy, claim.exponents[i]);
    w.update(lhs, local * holder * norm2(v), fd ? kFdCertTol : kCertTol, t, x, y, &v);
  }
  auto rep = finish("hessian_smooth", trials, w, p.regularity.notes, fd);
  return rep;
}

CertificateReport certify_hessian_smooth(const PotentialSpec& p, std::size_t trials,
                                         double radius, std::uint64_t rng_seed) {
  if (!p.regularity.has_hessian_smoothness())
    throw ConfigError("potential declares no hessian smoothness metadata");
  if (!p.has_hessian_action() && !p.grad)
    throw CapabilityError("no hessian action and no gradient to difference");
  return certify_hessian_smooth(
      p,
      SmoothnessClaim{p.regularity.hessian_exponents, p.regularity.hessian_consts,
                      p.regularity.hessian_local_power},
      trials, radius, rng_seed);
}

CertificateReport certify_gradient_growth(const PotentialSpec& p, std::size_t trials,
                                          double radius, std::uint64_t rng_seed) {
  if (!p.regularity.has_smoothness())
    throw ConfigError("potential declares no smoothness metadata");
  const auto& m = p.regularity;
  const double n_terms = static_cast<double>(m.num_terms());
  const double lg = m.max_smooth_const();
  const double power = m.local_power + m.max_smooth_exponent();
  RngStream rng(rng_seed);
  WorstCase w;
  for (std::size_t t = 0; t < trials; ++t) {
    const bool shell = (t % 5 == 4);
    Vec x = ball_point(rng, p.dim, radius, shell);
    const double lhs = norm2(p.grad(x));
    const double rhs = 2.0 * n_terms * lg * (1.0 + std::pow(norm2(x), power));
    w.update(lhs, rhs, kCertTol, t, x, x);
  }
  return finish("gradient_growth", trials, w, m.notes);
}

CertificateReport certify_descent_bound(const PotentialSpec& p, std::size_t trials,
                                        double radius, std::uint64_t rng_seed) {
  if (!p.regularity.has_smoothness())
    throw ConfigError("potential declares no smoothness metadata");
  const auto& m = p.regularity;
  const double lg = m.max_smooth_const();
  const double a1 = m.min_smooth_exponent();
  RngStream rng(rng_seed);
  WorstCase w;
  for (std::size_t t = 0; t < trials; ++t) {
    const bool shell = (t % 5 == 4);
    Vec x = ball_point(rng, p.dim, radius, shell);
    Vec y = ball_point(rng, p.dim, radius, shell);
    const Vec gx = p.grad(x);
    const Vec d = sub(y, x);
    const double lhs = p.eval(y);
    const double nx = norm2(x), ny = norm2(y), dxy = norm2(d);
    double tail = 0.0;
    for (double ai : m.smooth_exponents) tail += std::pow(dxy, 1.0 + ai);
    const double rhs =
        p.eval(x) + dot(gx, d) +
        (2.0 * lg / (1.0 + a1)) *
            (1.0 + std::pow(nx, m.local_power) + std::pow(ny, m.local_power)) * tail;
    w.update(lhs, rhs, kCertTol, t, x, y);
  }
  return finish("descent_bound", trials, w, m.notes);
}

}  // namespace ula
