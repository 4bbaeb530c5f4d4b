#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

#include "shdoa/error.hpp"

namespace shdoa::detail {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int len = static_cast<int>(n);
  auto* real = fftw_alloc_real(n);
  auto* cplx = fftw_alloc_complex(n / 2 + 1);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(len, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(len, cplx, real,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  fftw_free(real);
  fftw_free(cplx);
  return cache.emplace(n, p).first->second;
}

}  // namespace

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = in.size();
  if (out.size() != n / 2 + 1) throw ShapeError("rfft output size must be n/2+1");
  const auto& p = plans_for(n);
  std::vector<double> buf(in.begin(), in.end());
  fftw_execute_dft_r2c(p.forward, buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft(std::span<const std::complex<double>> in, std::span<double> out) {
  const std::size_t n = out.size();
  if (in.size() != n / 2 + 1) throw ShapeError("irfft input size must be n/2+1");
  const auto& p = plans_for(n);
  std::vector<std::complex<double>> buf(in.begin(), in.end());
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(buf.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::vector<double>> convolve_many(std::span<const double> x,
                                               const std::vector<std::vector<double>>& filters,
                                               std::size_t out_len) {
  std::size_t max_h = 0;
  for (const auto& h : filters) max_h = std::max(max_h, h.size());
  std::vector<std::vector<double>> out(filters.size(), std::vector<double>(out_len, 0.0));
  if (x.empty() || max_h == 0 || out_len == 0) return out;

  // Samples of x beyond out_len cannot reach the kept output, so dropping
  // them lets a transform of length >= used + max_h - 1 hold the result
  // without circular wrap.
  const std::size_t used = std::min(x.size(), out_len);
  const std::size_t full = used + max_h - 1;
  const std::size_t n = next_pow2(full);
  std::vector<double> xp(n, 0.0);
  std::copy_n(x.begin(), used, xp.begin());
  std::vector<std::complex<double>> xf(n / 2 + 1);
  rfft(xp, xf);

  std::vector<double> hp(n);
  std::vector<std::complex<double>> hf(n / 2 + 1);
  std::vector<double> y(n);
  for (std::size_t f = 0; f < filters.size(); ++f) {
    const auto& h = filters[f];
    if (h.empty()) continue;
    std::fill(hp.begin(), hp.end(), 0.0);
    std::copy(h.begin(), h.end(), hp.begin());
    rfft(hp, hf);
    for (std::size_t i = 0; i < hf.size(); ++i) hf[i] *= xf[i];
    irfft(hf, y);
    std::copy_n(y.begin(), std::min(out_len, full), out[f].begin());
  }
  return out;
}

std::vector<double> convolve(std::span<const double> x, std::span<const double> h,
                             std::size_t out_len) {
  std::vector<std::vector<double>> filters{std::vector<double>(h.begin(), h.end())};
  return std::move(convolve_many(x, filters, out_len).front());
}

}  // namespace shdoa::detail
