#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the solver paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace prefrank::testing {

using DenseMatrix = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(DenseMatrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return x;
}

inline DenseMatrix invert(const DenseMatrix& a) {
  const std::size_t n = a.size();
  DenseMatrix inv(n, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    auto col = gauss_solve(a, e);
    for (std::size_t i = 0; i < n; ++i) inv[i][k] = col[i];
  }
  return inv;
}

// Spring energy H(s) for a dense weight matrix.
inline double spring_energy(const DenseMatrix& w, double alpha, const std::vector<double>& s) {
  double h = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double d = s[i] - s[j] - 1.0;
      h += 0.5 * w[i][j] * d * d;
    }
    h += 0.5 * alpha * s[i] * s[i];
  }
  return h;
}

// dH/ds_k written directly from the energy.
inline std::vector<double> spring_gradient(const DenseMatrix& w, double alpha,
                                           const std::vector<double>& s) {
  const std::size_t n = s.size();
  std::vector<double> g(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) g[k] += w[k][j] * (s[k] - s[j] - 1.0);
    for (std::size_t i = 0; i < n; ++i) g[k] -= w[i][k] * (s[i] - s[k] - 1.0);
    g[k] += alpha * s[k];
  }
  return g;
}

inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = f(x);
    x[k] = keep - h;
    const double down = f(x);
    x[k] = keep;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

// Connected components of the undirected support of w.
inline std::vector<int> components(const DenseMatrix& w) {
  const std::size_t n = w.size();
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if ((w[u][v] > 0 || w[v][u] > 0) && comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

// Direct solve of the normal equations of H. For alpha = 0 each connected
// component is pinned to mean zero by adding its indicator outer product,
// which leaves the minimizer set unchanged and selects the centered one.
inline std::vector<double> springrank_oracle(const DenseMatrix& w, double alpha) {
  const std::size_t n = w.size();
  DenseMatrix a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] += alpha;
    for (std::size_t j = 0; j < n; ++j) {
      a[i][i] += w[i][j] + w[j][i];
      a[i][j] -= w[i][j] + w[j][i];
      b[i] += w[i][j] - w[j][i];
    }
  }
  if (alpha == 0) {
    auto comp = components(w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (comp[i] == comp[j]) a[i][j] += 1.0;
  }
  return gauss_solve(a, b);
}

// Maximizes a unimodal function on [lo, hi].
inline double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct OracleFit {
  std::vector<double> beta, se;
};

// Least squares through X'X b = X'y with classical standard errors.
inline OracleFit normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t n = x.size(), p = x[0].size();
  DenseMatrix xtx(p, std::vector<double>(p, 0));
  std::vector<double> xty(p, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i) {
      xty[i] += x[r][i] * y[r];
      for (std::size_t j = 0; j < p; ++j) xtx[i][j] += x[r][i] * x[r][j];
    }
  OracleFit f;
  f.beta = gauss_solve(xtx, xty);
  double rss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0;
    for (std::size_t i = 0; i < p; ++i) fit += x[r][i] * f.beta[i];
    rss += (y[r] - fit) * (y[r] - fit);
  }
  const auto inv = invert(xtx);
  for (std::size_t i = 0; i < p; ++i) f.se.push_back(std::sqrt(rss / (n - p) * inv[i][i]));
  return f;
}

}  // namespace prefrank::testing
