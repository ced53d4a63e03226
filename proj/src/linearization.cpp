#include "mvgf/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mvgf {

using std::numbers::pi;

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Symbol of -div(grad .) as realized by the spectral operators.
double stiffness_symbol(const TorusGrid& g, std::size_t n) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) s += g.derivative_symbol(n, a) * g.derivative_symbol(n, a);
  return s;
}

// -div(rho0 grad phi)
std::vector<double> apply_weighted(const DensityField& rho0, std::span<const double> phi) {
  const auto& g = rho0.grid();
  const auto r = rho0.values();
  std::vector<Complex> hat(g.size()), acc(g.size()), work(g.size());
  std::vector<double> comp(g.size());
  fft::forward(g, phi, hat);
  const Complex i(0.0, 1.0);
  for (int a = 0; a < g.dim(); ++a) {
    for (std::size_t n = 0; n < g.size(); ++n) work[n] = i * g.derivative_symbol(n, a) * hat[n];
    fft::inverse_real(g, work, comp);
    for (std::size_t n = 0; n < g.size(); ++n) comp[n] *= r[n];
    fft::forward(g, std::span<const double>(comp), work);
    for (std::size_t n = 0; n < g.size(); ++n) acc[n] -= i * g.derivative_symbol(n, a) * work[n];
  }
  std::vector<double> out(g.size());
  fft::inverse_real(g, acc, out);
  return out;
}

// Removes the components the spectral gradient cannot see.
std::vector<double> project_range(const TorusGrid& g, std::span<const double> f) {
  std::vector<Complex> hat(g.size());
  fft::forward(g, f, hat);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (stiffness_symbol(g, n) == 0.0) hat[n] = 0.0;
  }
  std::vector<double> out(g.size());
  fft::inverse_real(g, hat, out);
  return out;
}

std::vector<double> precondition(const TorusGrid& g, std::span<const double> r) {
  std::vector<Complex> hat(g.size());
  fft::forward(g, r, hat);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double s = stiffness_symbol(g, n);
    hat[n] = s > 0.0 ? hat[n] / s : Complex{};
  }
  std::vector<double> out(g.size());
  fft::inverse_real(g, hat, out);
  return out;
}

}  // namespace

GradientVectorField GradientVectorField::from_potential(RealField phi) {
  if (!phi.is_scalar()) throw ConfigError("gradient field potential must be scalar");
  const double m = mean(phi.channel(0));
  for (auto& v : phi.values) v -= m;
  RealField field = gradient(phi);
  return {std::move(phi), std::move(field)};
}

PoissonResult weighted_poisson_solve(const DensityField& rho0, const RealField& f, const PoissonOptions& opts) {
  const auto& g = rho0.grid();
  if (!(f.grid == g) || !f.is_scalar()) throw ConfigError("weighted_poisson_solve: f must be scalar on rho0's grid");
  f.require_finite("poisson right-hand side");
  if (rho0.min() <= 0.0) throw ConfigError("weighted_poisson_solve: rho0 must be positive");
  const double fmean = mean(f.channel(0));
  const double fnorm = norm2(f.channel(0));
  if (std::abs(fmean) > 1e-12 * std::max(1.0, fnorm / std::sqrt(double(g.size())))) {
    throw ConfigError("weighted_poisson_solve: right-hand side is not mean-zero (mean = " + std::to_string(fmean) +
                      ")");
  }

  // Solve -div(rho0 grad phi) = -f.
  std::vector<double> b = project_range(g, f.channel(0));
  for (auto& v : b) v = -v;
  const double bnorm = norm2(b);
  PoissonResult out{RealField::scalar(g), 0, 0.0};
  if (bnorm == 0.0) return out;

  std::vector<double> x(g.size(), 0.0), r = b;
  std::vector<double> z = precondition(g, r), p = z;
  double rz = dot(r, z);
  double res = 1.0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const auto ap = apply_weighted(rho0, p);
    const double alpha = rz / dot(p, ap);
    for (std::size_t n = 0; n < x.size(); ++n) {
      x[n] += alpha * p[n];
      r[n] -= alpha * ap[n];
    }
    res = norm2(r) / bnorm;
    if (res <= opts.rel_tol) {
      ++it;
      break;
    }
    z = precondition(g, r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t n = 0; n < p.size(); ++n) p[n] = z[n] + beta * p[n];
  }

  // Report the true residual of the defining equation.
  const auto ax = apply_weighted(rho0, x);
  double err = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) err += (ax[n] - b[n]) * (ax[n] - b[n]);
  out.relative_residual = std::sqrt(err) / bnorm;
  out.iterations = it;
  if (out.relative_residual > std::max(1e-10, 10.0 * opts.rel_tol)) {
    throw NumericalError("weighted_poisson_solve stagnated: relative residual " +
                         std::to_string(out.relative_residual) + " after " + std::to_string(it) + " iterations");
  }
  const double m = mean(x);
  for (auto& v : x) v -= m;
  out.phi = RealField(g, 1, std::move(x));
  return out;
}

GradientVectorField helmholtz_project(const DensityField& rho0, const RealField& X, const PoissonOptions& opts) {
  const auto& g = rho0.grid();
  if (!(X.grid == g) || X.channels != g.dim()) throw ConfigError("helmholtz_project: X must be a vector field");
  X.require_finite("helmholtz_project input");
  RealField flux = X;
  const auto r = rho0.values();
  for (int a = 0; a < g.dim(); ++a) {
    auto c = flux.channel(a);
    for (std::size_t n = 0; n < g.size(); ++n) c[n] *= r[n];
  }
  RealField f = divergence(flux);
  // The spectral divergence has no k = 0 component; remove the roundoff.
  const double m = mean(f.channel(0));
  for (auto& v : f.values) v -= m;
  auto sol = weighted_poisson_solve(rho0, f, opts);
  return GradientVectorField::from_potential(std::move(sol.phi));
}

double weighted_inner(const DensityField& rho0, const RealField& a, const RealField& b) {
  const auto r = rho0.values();
  double s = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const auto x = a.channel(c);
    const auto y = b.channel(c);
    for (std::size_t n = 0; n < r.size(); ++n) s += r[n] * x[n] * y[n];
  }
  return s / static_cast<double>(r.size());
}

// ---------------------------------------------------------------------------

HessianOperator::HessianOperator(DensityField rho0, RealField V, KernelMultiplier mult)
    : rho0_(std::move(rho0)), V_(std::move(V)), mult_(std::move(mult)) {
  const auto& g = rho0_.grid();
  if (!(V_.grid == g) || !(mult_.grid == g)) throw ConfigError("HessianOperator: grid mismatch");
  if (rho0_.min() <= 0.0) throw ConfigError("HessianOperator: base state must be positive");
  const int d = g.dim();

  const auto v_hat = forward_transform(V_);
  SpectralField hv(g, d * d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      auto dst = hv.channel(a * d + b);
      auto src = v_hat.channel(0);
      for (std::size_t n = 0; n < g.size(); ++n) {
        dst[n] = -g.derivative_symbol(n, a) * g.derivative_symbol(n, b) * src[n];
      }
    }
  }
  hess_V_ = inverse_transform(hv);
  hess_W_rho0_ = hessian_convolve(rho0_.field());
}

RealField HessianOperator::hessian_convolve(const RealField& f) const {
  const auto& g = grid();
  const int d = g.dim();
  const auto f_hat = forward_transform(f);
  SpectralField out(g, d * d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      auto dst = out.channel(a * d + b);
      auto src = f_hat.channel(0);
      for (std::size_t n = 0; n < g.size(); ++n) {
        dst[n] = -g.derivative_symbol(n, a) * g.derivative_symbol(n, b) * mult_.w_hat[n] * src[n];
      }
    }
  }
  return inverse_transform(out);
}

RealField HessianOperator::interaction_term(const RealField& xi) const {
  const auto& g = grid();
  const int d = g.dim();
  const auto r = rho0_.values();
  RealField out = RealField::vector(g);
  for (int b = 0; b < d; ++b) {
    RealField weighted(g, 1, std::vector<double>(xi.channel(b).begin(), xi.channel(b).end()));
    auto w = weighted.channel(0);
    for (std::size_t n = 0; n < g.size(); ++n) w[n] *= r[n];
    const auto hw = hessian_convolve(weighted);
    for (int a = 0; a < d; ++a) {
      auto dst = out.channel(a);
      const auto A = hess_W_rho0_.channel(a * d + b);
      const auto conv = hw.channel(a * d + b);
      const auto x = xi.channel(b);
      for (std::size_t n = 0; n < g.size(); ++n) dst[n] += A[n] * x[n] - conv[n];
    }
  }
  return out;
}

RealField HessianOperator::apply_unprojected(const RealField& xi) const {
  const auto& g = grid();
  const int d = g.dim();
  if (!(xi.grid == g) || xi.channels != d) throw ConfigError("HessianOperator: xi must be a vector field on the grid");
  const auto r = rho0_.values();
  RealField out = interaction_term(xi);
  for (int a = 0; a < d; ++a) {
    // -rho0^{-1} div(rho0 grad xi_a)
    RealField comp(g, 1, std::vector<double>(xi.channel(a).begin(), xi.channel(a).end()));
    RealField flux = gradient(comp);
    for (int b = 0; b < d; ++b) {
      auto c = flux.channel(b);
      for (std::size_t n = 0; n < g.size(); ++n) c[n] *= r[n];
    }
    const auto div = divergence(flux);
    auto dst = out.channel(a);
    const auto dv = div.channel(0);
    for (std::size_t n = 0; n < g.size(); ++n) dst[n] -= dv[n] / r[n];
    for (int b = 0; b < d; ++b) {
      const auto hv = hess_V_.channel(a * d + b);
      const auto x = xi.channel(b);
      for (std::size_t n = 0; n < g.size(); ++n) dst[n] += hv[n] * x[n];
    }
  }
  return out;
}

GradientVectorField HessianOperator::apply(const GradientVectorField& xi) const {
  return helmholtz_project(rho0_, apply_unprojected(xi.field));
}

// ---------------------------------------------------------------------------

void fourier_potential_basis(const TorusGrid& grid, int max_mode, std::vector<Wavevector>& modes,
                             std::vector<bool>& is_sine) {
  modes.clear();
  is_sine.clear();
  auto add = [&](Wavevector k) {
    for (bool s : {false, true}) {
      modes.push_back(k);
      is_sine.push_back(s);
    }
  };
  if (grid.dim() == 1) {
    for (int k = 1; k <= max_mode; ++k) add({k, 0});
  } else {
    for (int k1 = 0; k1 <= max_mode; ++k1) {
      for (int k2 = -max_mode; k2 <= max_mode; ++k2) {
        if (k1 == 0 && k2 <= 0) continue;
        add({k1, k2});
      }
    }
  }
}

RealField fourier_potential(const TorusGrid& grid, const Wavevector& k, bool sine) {
  RealField phi = RealField::scalar(grid);
  auto v = phi.channel(0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto x = grid.node(n);
    const double arg = 2.0 * pi * (k[0] * x[0] + k[1] * x[1]);
    v[n] = sine ? std::sin(arg) : std::cos(arg);
  }
  return phi;
}

SpectrumReport assemble_spectrum(const HessianOperator& op, int max_mode, double kernel_tol_rel) {
  const auto& g = op.grid();
  if (max_mode < 1) throw ConfigError("assemble_spectrum: max_mode must be at least 1");
  if (2 * max_mode >= g.points_per_axis()) throw ConfigError("assemble_spectrum: max_mode exceeds grid band");
  const long long side = 2LL * max_mode + 1;
  const long long dim_basis = (g.dim() == 1 ? side : side * side) - 1;
  if (dim_basis > kMaxSpectrumBasis) {
    throw ConfigError("assemble_spectrum: basis dimension " + std::to_string(dim_basis) + " exceeds " +
                      std::to_string(kMaxSpectrumBasis));
  }

  SpectrumReport rep;
  fourier_potential_basis(g, max_mode, rep.basis_modes, rep.basis_is_sine);
  const int D = static_cast<int>(rep.basis_modes.size());
  rep.basis_size = D;

  std::vector<GradientVectorField> xi;
  xi.reserve(D);
  for (int a = 0; a < D; ++a) {
    xi.push_back(GradientVectorField::from_potential(fourier_potential(g, rep.basis_modes[a], rep.basis_is_sine[a])));
  }
  std::vector<RealField> image;
  image.reserve(D);
  for (int a = 0; a < D; ++a) image.push_back(op.apply(xi[a]).field);

  const auto& rho0 = op.base_state();
  rep.stiffness.resize(D, D);
  rep.gram.resize(D, D);
  for (int a = 0; a < D; ++a) {
    for (int b = 0; b < D; ++b) {
      rep.stiffness(b, a) = weighted_inner(rho0, image[a], xi[b].field);
      if (b >= a) rep.gram(a, b) = rep.gram(b, a) = weighted_inner(rho0, xi[a].field, xi[b].field);
    }
  }
  const double smax = rep.stiffness.cwiseAbs().maxCoeff();
  rep.asymmetry = smax > 0.0 ? (rep.stiffness - rep.stiffness.transpose()).cwiseAbs().maxCoeff() / smax : 0.0;
  const Eigen::MatrixXd sym = 0.5 * (rep.stiffness + rep.stiffness.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(rep.gram);
  if (llt.info() != Eigen::Success) throw NumericalError("assemble_spectrum: Gram matrix is not positive definite");
  const Eigen::MatrixXd Lmat = llt.matrixL();
  Eigen::MatrixXd tmp = Lmat.triangularView<Eigen::Lower>().solve(sym);
  Eigen::MatrixXd C = Lmat.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
  C = 0.5 * (C + C.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("assemble_spectrum: eigensolver failed");
  rep.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + D);
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());

  double radius = 0.0;
  for (double l : rep.eigenvalues) radius = std::max(radius, std::abs(l));
  rep.kernel_tol = kernel_tol_rel * radius;
  rep.kernel_dim = static_cast<int>(
      std::count_if(rep.eigenvalues.begin(), rep.eigenvalues.end(), [&](double l) { return std::abs(l) < rep.kernel_tol; }));
  return rep;
}

}  // namespace mvgf
