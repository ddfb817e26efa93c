#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>

namespace afcmem::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace

void dft(std::vector<cplx>& data, int sign) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  Plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    // FFTW_FORWARD is exp(-2 pi i kn/N), FFTW_BACKWARD is exp(+2 pi i kn/N).
    plan.reset(fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf,
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());
}

std::size_t good_fft_size(std::size_t n) {
  auto smooth = [](std::size_t m) {
    for (std::size_t p : {2u, 3u, 5u})
      while (m % p == 0) m /= p;
    return m == 1;
  };
  std::size_t m = std::max<std::size_t>(n, 1);
  while (!smooth(m)) ++m;
  return m;
}

std::vector<cplx> linear_convolve(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_n = a.size() + b.size() - 1;
  const std::size_t n = good_fft_size(out_n);
  std::vector<cplx> fa(n), fb(n);
  std::copy(a.begin(), a.end(), fa.begin());
  std::copy(b.begin(), b.end(), fb.begin());
  dft(fa, -1);
  dft(fb, -1);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  dft(fa, +1);
  const double inv = 1.0 / static_cast<double>(n);
  fa.resize(out_n);
  for (auto& v : fa) v *= inv;
  return fa;
}

}  // namespace afcmem::detail
