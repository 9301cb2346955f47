#include "oscweak/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace oscweak::fft {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void transform(std::span<std::complex<double>> data, std::span<const std::size_t> dims, int sign) {
  std::vector<int> n(dims.begin(), dims.end());
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (total != data.size()) throw std::logic_error("fft: data size does not match dims");
  if (total == 0) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    // The FFTW planner is not reentrant; execution is.
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf,
                         sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

std::vector<double> frequencies(std::size_t n, double h) {
  std::vector<double> f(n);
  const double scale = 1.0 / (static_cast<double>(n) * h);
  const std::size_t half = (n - 1) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const long long k = i <= half ? static_cast<long long>(i) : static_cast<long long>(i) - static_cast<long long>(n);
    f[i] = static_cast<double>(k) * scale;
  }
  return f;
}

}  // namespace oscweak::fft
