#include <cmath>
#include <limits>
#include <vector>

#include "ulalab/errors.hpp"
#include "ulalab/metrics.hpp"

namespace ula {

// Dense minimum-cost assignment via shortest augmenting paths on reduced
// costs (the Hungarian algorithm in its O(n^3) potentials form). Rows and
// columns are 1-indexed internally; column 0 is the virtual start.
double assignment_cost(const std::vector<double>& cost, std::size_t n) {
  if (n == 0) return 0.0;
  if (cost.size() != n * n) throw InvalidArgumentError("cost matrix must be n*n");

  const double inf = std::numeric_limits<double>::infinity();
  auto a = [&](std::size_t i, std::size_t j) -> double {
    return cost[(i - 1) * n + (j - 1)];
  };

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += a(p[j], j);
  return total;
}

}  // namespace ula
