#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mvgf/grid.hpp"
#include "mvgf/potentials.hpp"

namespace mvgf {

/// A gradient vector field together with its mean-zero potential.
struct GradientVectorField {
  RealField potential;  // phi, mean zero
  RealField field;      // grad phi

  static GradientVectorField from_potential(RealField phi);
};

struct PoissonOptions {
  double rel_tol = 1e-12;
  int max_iter = 1000;
};

struct PoissonResult {
  RealField phi;
  int iterations = 0;
  double relative_residual = 0.0;  // ||div(rho0 grad phi) - f|| / ||f||
};

/// Solves div(rho0 grad phi) = f for mean-zero phi by conjugate gradients on
/// -div(rho0 grad .), preconditioned with the inverse of the constant-
/// coefficient operator. Components of f invisible to the spectral gradient
/// (the k = 0 and pure-Nyquist modes) are dropped; f must be mean-zero to 1e-12.
PoissonResult weighted_poisson_solve(const DensityField& rho0, const RealField& f, const PoissonOptions& opts = {});

/// P_{rho0} X = grad phi with div(rho0 grad phi) = div(rho0 X).
GradientVectorField helmholtz_project(const DensityField& rho0, const RealField& X, const PoissonOptions& opts = {});

/// <a, b>_{rho0} = mean(rho0 a.b) for vector fields.
double weighted_inner(const DensityField& rho0, const RealField& a, const RealField& b);

/// Linearization of the Wasserstein gradient at a stationary state:
///   L xi = P_{rho0}(-rho0^{-1} div(rho0 grad xi) + hess(V) xi + K[xi]),
///   K[xi](x) = (hess W * rho0)(x) xi(x) - (hess W * (rho0 xi))(x).
/// Second derivatives of W only ever appear as Fourier multipliers
/// -(2 pi)^2 k_a k_b W^(k).
class HessianOperator {
 public:
  HessianOperator(DensityField rho0, RealField V, KernelMultiplier mult);

  const DensityField& base_state() const { return rho0_; }
  const TorusGrid& grid() const { return rho0_.grid(); }

  /// Unprojected image of a vector field.
  RealField apply_unprojected(const RealField& xi) const;
  GradientVectorField apply(const GradientVectorField& xi) const;
  /// K[xi] alone.
  RealField interaction_term(const RealField& xi) const;

 private:
  RealField hessian_convolve(const RealField& f) const;  // dim*dim channels of hess W * f

  DensityField rho0_;
  RealField V_;
  KernelMultiplier mult_;
  RealField hess_V_;        // dim*dim channels, row-major (a, b)
  RealField hess_W_rho0_;   // dim*dim channels
};

using LinearOperatorHandle = HessianOperator;

inline GradientVectorField hessian_apply(const LinearOperatorHandle& h, const GradientVectorField& xi) {
  return h.apply(xi);
}

struct SpectrumReport {
  int basis_size = 0;
  std::vector<double> eigenvalues;  // ascending
  int kernel_dim = 0;
  double kernel_tol = 0.0;
  std::vector<Wavevector> basis_modes;  // wavevector of each basis potential
  std::vector<bool> basis_is_sine;
  Eigen::MatrixXd stiffness;  // <L grad phi_a, grad phi_b>_{rho0}
  Eigen::MatrixXd gram;       // <grad phi_a, grad phi_b>_{rho0}
  double asymmetry = 0.0;     // max |S - S^T| / max |S|
};

inline constexpr int kMaxSpectrumBasis = 4096;

/// Real Fourier potentials cos / sin(2 pi k.x), 0 < |k|_inf <= max_mode.
void fourier_potential_basis(const TorusGrid& grid, int max_mode, std::vector<Wavevector>& modes,
                             std::vector<bool>& is_sine);
RealField fourier_potential(const TorusGrid& grid, const Wavevector& k, bool sine);

/// Galerkin matrix of L on the Fourier-potential basis, orthonormalized in the
/// rho0-weighted inner product by Cholesky, then diagonalized.
SpectrumReport assemble_spectrum(const HessianOperator& op, int max_mode, double kernel_tol_rel = 1e-7);

}  // namespace mvgf
