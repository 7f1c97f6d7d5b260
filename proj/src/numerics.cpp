#include "conic_ke/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace conic_ke::numerics {

std::vector<double> fornberg_weights(double x0, std::span<const double> x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<double> c((m + 1) * n, 0.0);
  auto at = [&](int k, int j) -> double& { return c[k * n + j]; };
  double c1 = 1.0;
  double c4 = x[0] - x0;
  at(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          at(k, i) = c1 * (k * at(k - 1, i - 1) - c5 * at(k, i - 1)) / c2;
        at(0, i) = -c1 * c5 * at(0, i - 1) / c2;
      }
      for (int k = mn; k >= 1; --k) at(k, j) = (c4 * at(k, j) - k * at(k - 1, j)) / c3;
      at(0, j) = c4 * at(0, j) / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

/// Stencil weights keyed by (derivative, order, offset of node within window, window size).
struct StencilCache {
  std::mutex lock;
  std::map<std::tuple<int, int, int>, std::vector<double>> table;

  const std::vector<double>& get(int deriv, int pos, int width) {
    std::lock_guard guard(lock);
    auto key = std::make_tuple(deriv, pos, width);
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    std::vector<double> x(width);
    for (int j = 0; j < width; ++j) x[j] = j;
    auto all = fornberg_weights(static_cast<double>(pos), x, deriv);
    std::vector<double> w(all.begin() + deriv * width, all.begin() + (deriv + 1) * width);
    return table.emplace(key, std::move(w)).first->second;
  }
};

StencilCache& cache() {
  static StencilCache c;
  return c;
}

Profile apply_stencil(std::span<const double> f, double h, int deriv, int order) {
  if (order != 2 && order != 4 && order != 6)
    throw std::invalid_argument("finite difference order must be 2, 4 or 6");
  const int n = static_cast<int>(f.size());
  const int half = order / 2;
  const int central = 2 * half + 1;
  // one-sided windows need an extra point for the second derivative
  const int edge = deriv == 1 ? order + 1 : order + 2;
  if (n < edge) throw std::invalid_argument("profile too short for finite differences");
  Profile out(n);
  const double scale = std::pow(h, -deriv);
  for (int i = 0; i < n; ++i) {
    int start, width, pos;
    if (i >= half && i + half < n) {
      start = i - half;
      width = central;
      pos = half;
    } else {
      width = edge;
      start = i < half ? 0 : n - width;
      pos = i - start;
    }
    const auto& w = cache().get(deriv, pos, width);
    double s = 0.0;
    for (int j = 0; j < width; ++j) s += w[j] * f[start + j];
    out[i] = s * scale;
  }
  return out;
}

}  // namespace

Profile derivative(std::span<const double> f, double h, int order) {
  return apply_stencil(f, h, 1, order);
}

Profile second_derivative(std::span<const double> f, double h, int order) {
  return apply_stencil(f, h, 2, order);
}

std::vector<double> simpson_weights(int n, double h) {
  if (n < 3 || n % 2 == 0) throw std::invalid_argument("Simpson rule needs an odd node count >= 3");
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& x : w) x *= h / 3.0;
  return w;
}

double simpson(std::span<const double> f, double h) {
  auto w = simpson_weights(static_cast<int>(f.size()), h);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

Profile cumulative_integral(std::span<const double> f, double h) {
  const int n = static_cast<int>(f.size());
  if (n < 4) throw std::invalid_argument("cumulative integral needs at least 4 nodes");
  Profile out(n, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    double piece;
    if (i == 0)
      piece = 9 * f[0] + 19 * f[1] - 5 * f[2] + f[3];
    else if (i == n - 2)
      piece = 9 * f[n - 1] + 19 * f[n - 2] - 5 * f[n - 3] + f[n - 4];
    else
      piece = -f[i - 1] + 13 * f[i] + 13 * f[i + 1] - f[i + 2];
    out[i + 1] = out[i] + piece * h / 24.0;
  }
  return out;
}

double interpolate(std::span<const double> f, double x0, double h, double x) {
  const int n = static_cast<int>(f.size());
  if (n < 4) throw std::invalid_argument("interpolation needs at least 4 nodes");
  const double u = (x - x0) / h;
  int i = static_cast<int>(std::floor(u)) - 1;
  i = std::clamp(i, 0, n - 4);
  double s = 0.0;
  for (int a = 0; a < 4; ++a) {
    double l = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) l *= (u - (i + b)) / static_cast<double>(a - b);
    s += l * f[i + a];
  }
  return s;
}

std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> sup, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n, 0.0), d(n, 0.0);
  double b = diag[0];
  if (b == 0.0) throw std::runtime_error("singular tridiagonal system");
  c[0] = n > 1 ? sup[0] / b : 0.0;
  d[0] = rhs[0] / b;
  for (std::size_t i = 1; i < n; ++i) {
    b = diag[i] - sub[i - 1] * c[i - 1];
    if (b == 0.0) throw std::runtime_error("singular tridiagonal system");
    c[i] = i + 1 < n ? sup[i] / b : 0.0;
    d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / b;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("line fit needs matching samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("degenerate abscissae in line fit");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    r += e * e;
  }
  fit.rms = std::sqrt(r / n);
  return fit;
}

double solve_increasing(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo), fhi = f(hi);
  for (int k = 0; k < 200 && flo > 0; ++k) {
    const double w = hi - lo;
    hi = lo;
    fhi = flo;
    lo -= 2 * w;
    flo = f(lo);
  }
  for (int k = 0; k < 200 && fhi < 0; ++k) {
    const double w = hi - lo;
    lo = hi;
    flo = fhi;
    hi += 2 * w;
    fhi = f(hi);
  }
  if (!(flo <= 0 && fhi >= 0)) throw std::runtime_error("root not bracketed");
  for (int k = 0; k < 200 && hi - lo > 1e-6 * (1 + std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm < 0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  // secant polish inside the bracket
  double x = lo - flo * (hi - lo) / (fhi - flo);
  for (int k = 0; k < 60; ++k) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    const double next = lo - flo * (hi - lo) / (fhi - flo);
    const double step = std::abs(next - x);
    x = std::clamp(next, lo, hi);
    if (step <= tol * (1 + std::abs(x))) break;
  }
  return x;
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex lock;
  static std::map<int, GaussRule> rules;
  std::lock_guard guard(lock);
  auto it = rules.find(n);
  if (it != rules.end()) return it->second;
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1 - x * x) * dp * dp);
  }
  return rules.emplace(n, std::move(r)).first->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels, int order) {
  const auto& rule = gauss_legendre(order);
  const double w = (b - a) / panels;
  double s = 0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * w;
    for (int i = 0; i < order; ++i) s += rule.weights[i] * f(c + 0.5 * w * rule.nodes[i]);
  }
  return s * 0.5 * w;
}

double sup_abs(std::span<const double> f) {
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace conic_ke::numerics
