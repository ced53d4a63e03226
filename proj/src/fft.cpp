#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "mvgf/grid.hpp"

namespace mvgf::fft {
namespace {

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (dim, M, sign) and never destroyed.
class PlanCache {
 public:
  fftw_plan get(const TorusGrid& g, int sign) {
    const auto key = std::make_tuple(g.dim(), g.points_per_axis(), sign);
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const int m = g.points_per_axis();
    auto* in = fftw_alloc_complex(g.size());
    auto* out = fftw_alloc_complex(g.size());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = g.dim() == 1 ? fftw_plan_dft_1d(m, in, out, sign, flags)
                                  : fftw_plan_dft_2d(m, m, in, out, sign, flags);
    fftw_free(in);
    fftw_free(out);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

}  // namespace

void forward(const TorusGrid& g, std::span<const Complex> in, std::span<Complex> out) {
  fftw_execute_dft(cache().get(g, FFTW_FORWARD), as_fftw(in.data()), as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& c : out) c *= scale;
}

void forward(const TorusGrid& g, std::span<const double> in, std::span<Complex> out) {
  std::vector<Complex> buffer(in.begin(), in.end());
  forward(g, std::span<const Complex>(buffer), out);
}

void inverse_real(const TorusGrid& g, std::span<const Complex> in, std::span<double> out) {
  std::vector<Complex> buffer(g.size());
  fftw_execute_dft(cache().get(g, FFTW_BACKWARD), as_fftw(in.data()), as_fftw(buffer.data()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = buffer[i].real();
}

}  // namespace mvgf::fft
