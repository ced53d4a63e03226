#include "mvgf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace mvgf {

using std::numbers::pi;

TorusGrid TorusGrid::create(int dim, int points_per_axis) {
  if (dim != 1 && dim != 2) {
    throw ConfigError("unsupported dimension " + std::to_string(dim) + " (expected 1 or 2)");
  }
  if (points_per_axis < 8) throw ConfigError("points per axis must be at least 8");
  if (points_per_axis % 2 != 0) throw ConfigError("points per axis must be even");
  return TorusGrid(dim, points_per_axis);
}

TorusGrid::TorusGrid(int dim, int m) : dim_(dim), m_(m) {
  size_ = dim == 1 ? static_cast<std::size_t>(m) : static_cast<std::size_t>(m) * m;
  dealias_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const auto k = wavevector(i);
    const bool keep = 3 * std::abs(k[0]) <= m_ && 3 * std::abs(k[1]) <= m_;
    dealias_[i] = keep ? 1.0 : 0.0;
  }
}

Wavevector TorusGrid::wavevector(std::size_t flat) const {
  if (dim_ == 1) return {wavenumber(static_cast<int>(flat)), 0};
  return {wavenumber(static_cast<int>(flat / m_)), wavenumber(static_cast<int>(flat % m_))};
}

std::size_t TorusGrid::flat_index(const Wavevector& k) const {
  auto wrap = [m = m_](int v) { return static_cast<std::size_t>(((v % m) + m) % m); };
  if (dim_ == 1) return wrap(k[0]);
  return wrap(k[0]) * m_ + wrap(k[1]);
}

std::size_t TorusGrid::negated_index(std::size_t flat) const {
  const auto k = wavevector(flat);
  return flat_index({-k[0], -k[1]});
}

std::array<double, 2> TorusGrid::node(std::size_t flat) const {
  const double h = spacing();
  if (dim_ == 1) return {static_cast<double>(flat) * h, 0.0};
  return {static_cast<double>(flat / m_) * h, static_cast<double>(flat % m_) * h};
}

double TorusGrid::derivative_symbol(std::size_t flat, int axis) const {
  const int k = wavevector(flat)[axis];
  if (k == nyquist()) return 0.0;
  return 2.0 * pi * k;
}

double TorusGrid::laplacian_magnitude(std::size_t flat) const {
  const auto k = wavevector(flat);
  return 4.0 * pi * pi * (double(k[0]) * k[0] + double(k[1]) * k[1]);
}

const std::vector<double>& TorusGrid::dealias_mask() const { return dealias_; }

// ---------------------------------------------------------------------------

RealField::RealField(const TorusGrid& g, int nchannels, double fill)
    : grid(g), channels(nchannels), values(g.size() * nchannels, fill) {}

RealField::RealField(const TorusGrid& g, int nchannels, std::vector<double> data)
    : grid(g), channels(nchannels), values(std::move(data)) {
  if (values.size() != g.size() * static_cast<std::size_t>(nchannels)) {
    throw ConfigError("field size does not match grid");
  }
}

std::span<double> RealField::channel(int c) {
  return std::span<double>(values).subspan(c * grid.size(), grid.size());
}

std::span<const double> RealField::channel(int c) const {
  return std::span<const double>(values).subspan(c * grid.size(), grid.size());
}

void RealField::require_finite(const char* what) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      const std::size_t node = i % grid.size();
      throw NumericalError(std::string(what) + ": non-finite value at channel " +
                           std::to_string(i / grid.size()) + ", node " + std::to_string(node));
    }
  }
}

SpectralField::SpectralField(const TorusGrid& g, int nchannels)
    : grid(g), channels(nchannels), coeffs(g.size() * nchannels) {}

std::span<Complex> SpectralField::channel(int c) {
  return std::span<Complex>(coeffs).subspan(c * grid.size(), grid.size());
}

std::span<const Complex> SpectralField::channel(int c) const {
  return std::span<const Complex>(coeffs).subspan(c * grid.size(), grid.size());
}

Complex SpectralField::coeff(const Wavevector& k, int c) const {
  return channel(c)[grid.flat_index(k)];
}

// ---------------------------------------------------------------------------

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

DensityField::DensityField(RealField base) : base_(std::move(base)) {
  if (!base_.is_scalar()) throw ConfigError("density must be a scalar field");
  base_.require_finite("density");
  const double lo = *std::min_element(base_.values.begin(), base_.values.end());
  if (lo < -kNegativeTolerance) {
    throw NumericalError("density has negative value " + std::to_string(lo));
  }
}

DensityField DensityField::normalized(RealField base) {
  DensityField d(std::move(base));
  const double m = d.mass();
  if (!(m > 0.0)) throw NumericalError("density has nonpositive mass");
  for (auto& v : d.base_.values) v /= m;
  return d;
}

DensityField DensityField::uniform(const TorusGrid& g) { return DensityField(RealField::scalar(g, 1.0)); }

double DensityField::mass() const { return mvgf::mean(values()); }
double DensityField::min() const { return *std::min_element(base_.values.begin(), base_.values.end()); }
double DensityField::max() const { return *std::max_element(base_.values.begin(), base_.values.end()); }

// ---------------------------------------------------------------------------

SpectralField forward_transform(const RealField& f) {
  f.require_finite("forward_transform input");
  SpectralField out(f.grid, f.channels);
  for (int c = 0; c < f.channels; ++c) fft::forward(f.grid, f.channel(c), out.channel(c));
  return out;
}

RealField inverse_transform(const SpectralField& c) {
  RealField out(c.grid, c.channels);
  for (int ch = 0; ch < c.channels; ++ch) fft::inverse_real(c.grid, c.channel(ch), out.channel(ch));
  return out;
}

SpectralField spectral_gradient(const SpectralField& f) {
  if (f.channels != 1) throw ConfigError("spectral_gradient expects a scalar field");
  const auto& g = f.grid;
  SpectralField out(g, g.dim());
  const Complex i(0.0, 1.0);
  for (int a = 0; a < g.dim(); ++a) {
    auto dst = out.channel(a);
    auto src = f.channel(0);
    for (std::size_t n = 0; n < g.size(); ++n) dst[n] = i * g.derivative_symbol(n, a) * src[n];
  }
  return out;
}

SpectralField spectral_divergence(const SpectralField& v) {
  const auto& g = v.grid;
  if (v.channels != g.dim()) throw ConfigError("spectral_divergence expects dim channels");
  SpectralField out(g, 1);
  auto dst = out.channel(0);
  const Complex i(0.0, 1.0);
  for (int a = 0; a < g.dim(); ++a) {
    auto src = v.channel(a);
    for (std::size_t n = 0; n < g.size(); ++n) dst[n] += i * g.derivative_symbol(n, a) * src[n];
  }
  return out;
}

RealField gradient(const RealField& f) { return inverse_transform(spectral_gradient(forward_transform(f))); }

RealField divergence(const RealField& v) { return inverse_transform(spectral_divergence(forward_transform(v))); }

}  // namespace mvgf
