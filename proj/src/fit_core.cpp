#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "zpl/fit.hpp"

namespace zpl {

namespace {

/// Solve A x = b for symmetric positive-definite A (m x m, row-major).
/// Returns false if the factorization breaks down.
bool cholesky_solve(std::vector<double> A, std::vector<double> b, std::size_t m,
                    std::vector<double>& x) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = A[i * m + j];
      for (std::size_t k = 0; k < j; ++k) sum -= A[i * m + k] * A[j * m + k];
      if (i == j) {
        if (sum <= 0.0) return false;
        A[i * m + i] = std::sqrt(sum);
      } else {
        A[i * m + j] = sum / A[j * m + j];
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= A[i * m + k] * b[k];
    b[i] = sum / A[i * m + i];
  }
  x.assign(m, 0.0);
  for (std::size_t ii = m; ii-- > 0;) {
    double sum = b[ii];
    for (std::size_t k = ii + 1; k < m; ++k) sum -= A[k * m + ii] * x[k];
    x[ii] = sum / A[ii * m + ii];
  }
  return true;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

FitResult lm_fit(const LmProblem& problem, const LmOptions& opts) {
  const std::size_t m = problem.p0.size();
  const std::size_t n = problem.n_residuals;
  if (m == 0 || problem.names.size() != m || problem.lower.size() != m || problem.upper.size() != m)
    throw std::invalid_argument("lm_fit: inconsistent problem dimensions");
  if (n < m) throw FitDataError("lm_fit: fewer residuals than parameters");

  std::vector<double> p(m);
  for (std::size_t j = 0; j < m; ++j) p[j] = clamp(problem.p0[j], problem.lower[j], problem.upper[j]);

  std::vector<double> r(n), J(n * m), rn(n), step, A(m * m), g(m);

  const auto evaluate = [&](const std::vector<double>& at, std::vector<double>& res, double* jac) {
    problem.eval(at.data(), res.data(), jac);
    double c2 = 0.0;
    for (double v : res) c2 += v * v;
    return c2;
  };

  const auto assemble_normal = [&]() {
    std::fill(A.begin(), A.end(), 0.0);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &J[i * m];
      for (std::size_t j = 0; j < m; ++j) {
        g[j] += row[j] * r[i];
        for (std::size_t k = 0; k <= j; ++k) A[j * m + k] += row[j] * row[k];
      }
    }
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k) A[j * m + k] = A[k * m + j];
  };

  // First-order KKT active set: a parameter pinned at a bound with the
  // gradient pushing outward is excluded from the solve, otherwise its
  // infeasible move leaks compensation into the free directions.
  const auto free_set = [&]() {
    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < m; ++j) {
      const bool blocked = (p[j] <= problem.lower[j] && g[j] > 0.0) ||
                           (p[j] >= problem.upper[j] && g[j] < 0.0);
      if (!blocked) free.push_back(j);
    }
    return free;
  };

  /// Damped normal-equation solve on the free subspace; blocked entries get
  /// a zero step.
  const auto solve_reduced = [&](double lambda, const std::vector<std::size_t>& free,
                                 std::vector<double>& out) {
    const std::size_t f = free.size();
    std::vector<double> Af(f * f), gf(f), delta;
    for (std::size_t i = 0; i < f; ++i) {
      gf[i] = -g[free[i]];
      for (std::size_t k = 0; k < f; ++k) Af[i * f + k] = A[free[i] * m + free[k]];
      const double d = Af[i * f + i];
      Af[i * f + i] = d + lambda * (d > 0.0 ? d : 1.0);
    }
    if (!cholesky_solve(Af, gf, f, delta)) return false;
    out.assign(m, 0.0);
    for (std::size_t i = 0; i < f; ++i) out[free[i]] = delta[i];
    return true;
  };

  // Gradient size in the Newton metric: the relative parameter step a nearly
  // undamped solve would take on the free subspace. Well-scaled at the
  // perfect-fit floor, where residual-direction tests degenerate.
  const auto newton_relstep = [&]() {
    const std::vector<std::size_t> free = free_set();
    if (free.empty()) return 0.0;
    std::vector<double> delta;
    if (!solve_reduced(1e-10, free, delta)) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t j : free)
      worst = std::max(worst, std::abs(delta[j]) / std::max(std::abs(p[j]), 1.0));
    return worst;
  };

  const auto snapshot = [&](double chi2, int iters, bool converged) {
    FitResult res;
    for (std::size_t j = 0; j < m; ++j) res.params[problem.names[j]] = p[j];
    res.chi2 = chi2;
    res.reduced_chi2 = n > m ? chi2 / static_cast<double>(n - m) : 0.0;
    res.n_iterations = iters;
    res.converged = converged;
    // Gauss-Newton covariance at the optimum.
    std::vector<double> cov_col;
    std::vector<double> e(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      e.assign(m, 0.0);
      e[j] = 1.0;
      double sigma = std::numeric_limits<double>::infinity();
      if (cholesky_solve(A, e, m, cov_col) && cov_col[j] > 0.0) sigma = std::sqrt(cov_col[j]);
      res.std_errors[problem.names[j]] = sigma;
    }
    return res;
  };

  double chi2 = evaluate(p, r, J.data());
  assemble_normal();
  double lambda = opts.lambda0;
  int iter = 0;

  while (iter < opts.max_iterations) {
    ++iter;
    if (chi2 == 0.0 || newton_relstep() < opts.gtol) return snapshot(chi2, iter, true);

    const std::vector<std::size_t> free = free_set();
    if (free.empty()) return snapshot(chi2, iter, true);  // KKT point at a bound vertex

    bool accepted = false;
    while (lambda <= 1e12) {
      if (!solve_reduced(lambda, free, step)) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> pn(m);
      for (std::size_t j = 0; j < m; ++j)
        pn[j] = clamp(p[j] + step[j], problem.lower[j], problem.upper[j]);
      for (std::size_t j = 0; j < m; ++j)
        assert(pn[j] >= problem.lower[j] && pn[j] <= problem.upper[j]);

      const double chi2n = evaluate(pn, rn, nullptr);
      if (chi2n < chi2) {
        p = pn;
        chi2 = evaluate(p, r, J.data());
        assemble_normal();
        lambda = std::max(lambda * 0.3, 1e-14);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }

    if (!accepted) {
      // No damping level yields a decrease: chi2 is at its numerical floor.
      // Accept the point if the Newton step is already insignificant.
      if (newton_relstep() < opts.stall_gtol) return snapshot(chi2, iter, true);
      lambda = 1e12;  // keep the loop deterministic until max_iterations
    }
  }

  if (newton_relstep() < opts.gtol) return snapshot(chi2, opts.max_iterations, true);
  throw FitNotConverged("lm_fit: no convergence after max iterations",
                        snapshot(chi2, opts.max_iterations, false));
}

}  // namespace zpl
