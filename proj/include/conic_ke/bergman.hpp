#pragma once

#include <vector>

#include "conic_ke/geometry.hpp"

namespace conic_ke {

/// Radial Hermitian metric on the anticanonical bundle with curvature omega.
/// log_norm is L(t) = log H(dz, dz) in the frame d/dz, so ||z^k (d/dz)^l||^2 = exp(k t + l L).
struct HermitianWeight {
  Profile log_norm;
  Profile log_norm_prime;        ///< L'(t), assembled without differencing L
  double mu = 1.0;
  double beta = 1.0;
  double kappa = 0.0;            ///< constant from rescaling the defining section
  Profile log_section_norm;      ///< log H(S, S) for the rescaled section S = c z d/dz
  double section_integral = 0.0; ///< int H(S, S) omega, equal to 1 after rescaling
};

/// Requires lambda = 1 and D = {0, infinity}.
HermitianWeight associated_hermitian_weight(const RadialKahlerPotential& pot, const ConeConfiguration& cone);

/// sup over |t| <= T/2 of |-L'' - Phi''|.
double hermitian_curvature_residual(const HermitianWeight& weight, const RadialKahlerPotential& pot);

/// Gram matrix of the monomials z^k, k = 0..2 ell.
struct SectionBasisGram {
  int ell = 1;
  std::vector<double> log_diagonal;  ///< log <z^k, z^k>
  std::vector<double> gram;          ///< row-major, scaled by the geometric mean of the diagonals
  double max_offdiagonal = 0.0;      ///< max |<z^j, z^k>| / sqrt(<z^j,z^j><z^k,z^k>), j != k
  double log_scale = 0.0;            ///< common scale removed from gram

  int dimension() const { return 2 * ell + 1; }
};

SectionBasisGram gram_matrix(int ell, const HermitianWeight& weight, const RadialKahlerPotential& pot);

struct BergmanDensity {
  int ell = 1;
  Profile rho;
  double inf = 0.0;
  double sup = 0.0;
  double trace = 0.0;  ///< int rho omega, which should be 2 ell + 1
};

BergmanDensity bergman_density(int ell, const SectionBasisGram& gram, const HermitianWeight& weight,
                               const RadialKahlerPotential& pot);

struct PartialC0Row {
  double beta = 1.0;
  int ell = 1;
  double inf_rho = 0.0;
  double sup_rho = 0.0;
  double trace_check = 0.0;  ///< trace - (2 ell + 1)
};

/// inf rho of the conic Kahler-Einstein football for each (beta, ell); rows in parameter order.
std::vector<PartialC0Row> partial_c0_scan(const std::vector<double>& betas, const std::vector<int>& ells,
                                          const Grid& grid = Grid(), int jobs = 1);

/// Residual densities (times Phi'') of the two Bochner identities for sigma = z^k.
struct BochnerResidual {
  Profile first;
  Profile second;
  double sup_first = 0.0;   ///< over |t| <= T/2
  double sup_second = 0.0;
};

BochnerResidual bochner_residual(int k, const RadialKahlerPotential& pot, int ell,
                                 const ConeConfiguration& cone);

/// Pointwise norms of an L^2-normalized section and of its covariant derivative.
struct SectionNorms {
  Profile norm2;
  Profile grad2;
};
SectionNorms monomial_norms(int k, int ell, const SectionBasisGram& gram, const HermitianWeight& weight,
                            const RadialKahlerPotential& pot);

/// sup over points and unit-L^2 sections of (||s|| + ell^{-1/2} ||grad s||) / ell^{1/2}.
double gradient_estimate_ratio(int ell, const RadialKahlerPotential& pot, const ConeConfiguration& cone);

struct PeakSectionReport {
  int monomial = 0;
  double width = 1.0;
  double residual = 0.0;     ///< L^2 distance to the holomorphic span, relative
  double value_ratio = 0.0;  ///< ||projection||(t0) / ||input||(t0)
};

/// Gaussian cutoff in t around t0 times the monomial peaking nearest t0, projected onto the span.
PeakSectionReport peak_section_experiment(double t0, int ell, const RadialKahlerPotential& pot,
                                          const ConeConfiguration& cone, double width = 1.0);

}  // namespace conic_ke
