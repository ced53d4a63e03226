#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mvgf/errors.hpp"

namespace mvgf {

using Complex = std::complex<double>;
using Wavevector = std::array<int, 2>;

/// Uniform periodic grid on the unit torus T^dim, dim in {1, 2}.
///
/// Nodes are x_i = i * spacing along every axis; flat storage is row-major
/// with axis 0 slowest. Spectral storage uses the same flat layout, where the
/// index i along an axis carries wavenumber i for i < M/2 and i - M otherwise,
/// so the mode set is {-M/2, ..., M/2 - 1}^dim.
class TorusGrid {
 public:
  TorusGrid() = default;

  /// Throws ConfigError for dim outside {1, 2}, odd M or M < 8.
  static TorusGrid create(int dim, int points_per_axis);

  int dim() const { return dim_; }
  int points_per_axis() const { return m_; }
  double spacing() const { return 1.0 / m_; }
  std::size_t size() const { return size_; }
  int nyquist() const { return -m_ / 2; }

  int wavenumber(int index) const { return index < m_ / 2 ? index : index - m_; }
  /// Wavevector of flat spectral index; component 1 is 0 when dim == 1.
  Wavevector wavevector(std::size_t flat) const;
  /// Flat spectral index of a wavevector (components reduced mod M).
  std::size_t flat_index(const Wavevector& k) const;
  /// Flat index of the mode -k.
  std::size_t negated_index(std::size_t flat) const;
  /// Coordinates of node `flat`.
  std::array<double, 2> node(std::size_t flat) const;

  /// 2*pi*k_axis with the Nyquist wavenumber mapped to zero.
  double derivative_symbol(std::size_t flat, int axis) const;
  /// 4*pi^2*|k|^2 (no Nyquist special case).
  double laplacian_magnitude(std::size_t flat) const;

  /// 2/3-rule mask: 1 where every |k_j| <= M/3, else 0.
  const std::vector<double>& dealias_mask() const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.dim_ == b.dim_ && a.m_ == b.m_;
  }

 private:
  TorusGrid(int dim, int m);

  int dim_ = 0;
  int m_ = 0;
  std::size_t size_ = 0;
  std::vector<double> dealias_;
};

/// Real grid function with 1 (scalar) or dim (vector) channels, stored
/// channel-major.
struct RealField {
  TorusGrid grid;
  int channels = 1;
  std::vector<double> values;

  RealField() = default;
  RealField(const TorusGrid& g, int nchannels, double fill = 0.0);
  RealField(const TorusGrid& g, int nchannels, std::vector<double> data);

  static RealField scalar(const TorusGrid& g, double fill = 0.0) { return {g, 1, fill}; }
  static RealField vector(const TorusGrid& g, double fill = 0.0) { return {g, g.dim(), fill}; }

  std::span<double> channel(int c);
  std::span<const double> channel(int c) const;

  bool is_scalar() const { return channels == 1; }
  /// Throws NumericalError naming the first non-finite entry.
  void require_finite(const char* what) const;
};

/// Fourier coefficients under f(x) = sum_k c(k) exp(2*pi*i k.x).
struct SpectralField {
  TorusGrid grid;
  int channels = 1;
  std::vector<Complex> coeffs;

  SpectralField() = default;
  SpectralField(const TorusGrid& g, int nchannels);

  std::span<Complex> channel(int c);
  std::span<const Complex> channel(int c) const;
  Complex coeff(const Wavevector& k, int c = 0) const;
};

/// Nonnegative scalar field with unit mass (up to normalization points).
class DensityField {
 public:
  static constexpr double kNegativeTolerance = 1e-10;

  DensityField() = default;
  /// Validates finiteness and the negativity tolerance; does not rescale.
  explicit DensityField(RealField base);
  /// Validates and rescales to unit mass.
  static DensityField normalized(RealField base);
  static DensityField uniform(const TorusGrid& g);

  const TorusGrid& grid() const { return base_.grid; }
  const RealField& field() const { return base_; }
  std::span<const double> values() const { return base_.channel(0); }
  double mass() const;
  double min() const;
  double max() const;

 private:
  RealField base_;
};

double mean(std::span<const double> v);

// ---------------------------------------------------------------------------
// Transforms and spectral calculus.

SpectralField forward_transform(const RealField& f);
RealField inverse_transform(const SpectralField& c);

/// Scalar -> vector; component j has coefficients 2*pi*i*k_j c(k).
SpectralField spectral_gradient(const SpectralField& f);
/// Vector -> scalar; sum_j 2*pi*i*k_j c_j(k).
SpectralField spectral_divergence(const SpectralField& v);

/// Real-space conveniences built on the spectral operators.
RealField gradient(const RealField& f);
RealField divergence(const RealField& v);

namespace fft {

/// Low-level transforms on flat buffers of length grid.size(). Thread-safe.
void forward(const TorusGrid& g, std::span<const double> in, std::span<Complex> out);
void forward(const TorusGrid& g, std::span<const Complex> in, std::span<Complex> out);
/// Inverse transform keeping the real part.
void inverse_real(const TorusGrid& g, std::span<const Complex> in, std::span<double> out);

}  // namespace fft

}  // namespace mvgf
