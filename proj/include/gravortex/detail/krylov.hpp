#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gravortex::detail {

using Vec = std::vector<double>;

struct GmresResult {
  int iterations = 0;
  double relative_residual = 1.0;
  bool converged = false;
};

/// Restarted GMRES for A x = b from x = 0, in the inner product `dot`.
/// `apply(in, out)` writes A in into out.
template <class Apply, class Dot>
GmresResult gmres(Apply&& apply, Dot&& dot, const Vec& b, Vec& x, double rtol, int restart,
                  int max_iters) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  GmresResult res;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    res.relative_residual = 0.0;
    res.converged = true;
    return res;
  }

  Vec r = b, w(n);
  std::vector<Vec> basis;
  std::vector<std::vector<double>> h;  // column j has j + 2 entries
  std::vector<double> cs, sn, g;

  while (res.iterations < max_iters) {
    const double beta = std::sqrt(dot(r, r));
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    basis.assign(1, r);
    for (double& v : basis[0]) v /= beta;
    h.clear();
    cs.clear();
    sn.clear();
    g.assign(1, beta);

    int k = 0;
    for (; k < restart && res.iterations < max_iters; ++k, ++res.iterations) {
      apply(basis[k], w);
      std::vector<double> col(k + 2, 0.0);
      // Modified Gram-Schmidt, repeated once for stability near convergence.
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) {
          const double hij = dot(w, basis[i]);
          col[i] += hij;
          for (std::size_t q = 0; q < n; ++q) w[q] -= hij * basis[i][q];
        }
      col[k + 1] = std::sqrt(dot(w, w));
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * col[i] + sn[i] * col[i + 1];
        col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
        col[i] = t;
      }
      const double rho = std::hypot(col[k], col[k + 1]);
      const double c = rho == 0.0 ? 1.0 : col[k] / rho;
      const double s = rho == 0.0 ? 0.0 : col[k + 1] / rho;
      cs.push_back(c);
      sn.push_back(s);
      const double hnext = col[k + 1];
      col[k] = rho;
      col[k + 1] = 0.0;
      g.push_back(-s * g[k]);
      g[k] *= c;
      h.push_back(std::move(col));
      res.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (res.relative_residual <= rtol || hnext == 0.0) {
        ++res.iterations;
        ++k;
        break;
      }
      Vec next = w;
      for (double& v : next) v /= hnext;
      basis.push_back(std::move(next));
    }

    // Back substitution for the least-squares coefficients.
    std::vector<double> y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
      y[i] = s / h[i][i];
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t q = 0; q < n; ++q) x[q] += y[j] * basis[j][q];

    // True residual for the restart.
    apply(x, w);
    for (std::size_t q = 0; q < n; ++q) r[q] = b[q] - w[q];
    const double true_rel = std::sqrt(dot(r, r)) / bnorm;
    res.relative_residual = true_rel;
    if (true_rel <= rtol) {
      res.converged = true;
      return res;
    }
    if (k == 0) break;
  }
  return res;
}

}  // namespace gravortex::detail
