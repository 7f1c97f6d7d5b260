#include <algorithm>
#include <cmath>
#include <limits>

#include "conic_ke/errors.hpp"
#include "conic_ke/ma_solver.hpp"

namespace conic_ke {

namespace {

/// Pencil (K + m^2/4 W) - sigma B with linear-element stiffness K, trapezoid-lumped W and
/// B = W Phi''. Natural (Neumann) conditions at the truncated ends.
struct Pencil {
  std::vector<double> diag_k, off_k, w, b;

  /// Number of eigenvalues strictly below sigma (Sylvester inertia of the LDL^T pivots).
  int count_below(double sigma, double m2) const {
    const std::size_t n = diag_k.size();
    int neg = 0;
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = diag_k[i] + 0.25 * m2 * w[i] - sigma * b[i];
      d = i == 0 ? a : a - off_k[i - 1] * off_k[i - 1] / d;
      if (d == 0.0) d = -std::numeric_limits<double>::min() * (1.0 + std::abs(a));
      if (d < 0.0) ++neg;
    }
    return neg;
  }

  double eigenvalue(int index, double m2) const {
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 200 && count_below(hi, m2) <= index; ++k) hi *= 2.0;
    if (count_below(hi, m2) <= index) throw Error("eigenvalue bracket not found");
    for (int k = 0; k < 200 && hi - lo > 1e-14 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (count_below(mid, m2) <= index)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }
};

}  // namespace

EigenReport first_eigenvalue(const RadialKahlerPotential& pot, const std::vector<int>& modes) {
  if (modes.empty()) throw InvalidArgument("mode list is empty");
  const auto& grid = pot.grid();
  const int n = grid.size();
  const double h = grid.spacing();
  Pencil p;
  p.diag_k.assign(n, 2.0 / h);
  p.diag_k.front() = p.diag_k.back() = 1.0 / h;
  p.off_k.assign(n - 1, -1.0 / h);
  p.w.assign(n, h);
  p.w.front() = p.w.back() = 0.5 * h;
  p.b.resize(n);
  for (int i = 0; i < n; ++i) p.b[i] = p.w[i] * pot.phi_doubleprime()[i];

  EigenReport rep;
  rep.lambda1 = std::numeric_limits<double>::infinity();
  for (int m : modes) {
    if (m < 0) throw InvalidArgument("Fourier modes must be nonnegative");
    // m = 0 carries the constant eigenfunction at 0; skip it
    const double lam = p.eigenvalue(m == 0 ? 1 : 0, static_cast<double>(m) * m);
    rep.modes.push_back(m);
    rep.by_mode.push_back(lam);
    rep.lambda1 = std::min(rep.lambda1, lam);
  }
  return rep;
}

}  // namespace conic_ke
