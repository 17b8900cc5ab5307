#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace qem {

// Derivative-free simplex minimizer (Nelder-Mead with the standard
// reflection/expansion/contraction/shrink coefficients). The objectives it
// serves here are low-dimensional and possibly non-smooth (trace distances),
// which is exactly the regime the method is good at.
struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int evals = 0;
  bool converged = false;  // objective spread fell below tolerance
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double initial_step, int max_evals,
                                    double tol_spread) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += initial_step;

  std::vector<double> fv(n + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    fv[i] = f(pts[i]);
    ++evals;
  }

  auto order = [&] {
    std::vector<std::size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      f2[i] = fv[idx[i]];
    }
    pts.swap(p2);
    fv.swap(f2);
  };

  constexpr double alpha = 1.0;  // reflect
  constexpr double gamma = 2.0;  // expand
  constexpr double rho = 0.5;    // contract
  constexpr double sigma = 0.5;  // shrink

  bool converged = false;
  while (evals < max_evals) {
    order();
    if (fv[n] - fv[0] < tol_spread) {
      converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);

    auto blend = [&](double w) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + w * (pts[n][j] - centroid[j]);
      return p;
    };

    std::vector<double> xr = blend(-alpha);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[0]) {
      std::vector<double> xe = blend(-alpha * gamma);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[n] = std::move(xe);
        fv[n] = fe;
      } else {
        pts[n] = std::move(xr);
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      pts[n] = std::move(xr);
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      std::vector<double> xc = blend(outside ? -alpha * rho : rho);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[n])) {
        pts[n] = std::move(xc);
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            pts[i][j] = pts[0][j] + sigma * (pts[i][j] - pts[0][j]);
          fv[i] = f(pts[i]);
          ++evals;
          if (evals >= max_evals) break;
        }
      }
    }
  }

  order();
  NelderMeadResult r;
  r.x = pts[0];
  r.fx = fv[0];
  r.evals = evals;
  r.converged = converged;
  return r;
}

// Deterministic compass (coordinate pattern) search. Slower than the simplex
// on smooth objectives but descends reliably along the creases a
// trace-distance objective has, so it is used as a final polish stage.
inline NelderMeadResult pattern_search(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double step, double min_step,
                                       int max_evals) {
  const std::size_t n = x.size();
  double fx = f(x);
  int evals = 1;
  while (step >= min_step && evals < max_evals) {
    bool improved = false;
    for (std::size_t i = 0; i < n && evals < max_evals; ++i) {
      for (double dir : {+1.0, -1.0}) {
        std::vector<double> cand = x;
        cand[i] += dir * step;
        const double fc = f(cand);
        ++evals;
        if (fc < fx) {
          x = std::move(cand);
          fx = fc;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  NelderMeadResult r;
  r.x = std::move(x);
  r.fx = fx;
  r.evals = evals;
  r.converged = step < min_step;
  return r;
}

}  // namespace qem
