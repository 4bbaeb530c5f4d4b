#include "shdoa/stft.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "fft.hpp"
#include "shdoa/error.hpp"

namespace shdoa {

void STFTSpec::validate() const {
  if (!(fs > 0.0)) throw ConfigError("STFT sample rate must be positive");
  if (window_len <= 0 || dft_len < window_len) throw ConfigError("STFT needs dft_len >= window_len > 0");
  if (hop * 2 != window_len) throw ConfigError("STFT hop must be half the window length");
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / length);
  return w;
}

Spectrogram stft_forward(const MultiChannel& signal, const STFTSpec& spec) {
  spec.validate();
  if (signal.fs != spec.fs) throw ConfigError("signal sample rate differs from STFT spec");
  const auto len = static_cast<long>(signal.length());
  if (len < spec.window_len) throw InsufficientDataError("signal shorter than one STFT window");

  const int frames = static_cast<int>((len - spec.window_len) / spec.hop + 1);
  const int bins = spec.dft_len / 2 + 1;
  const auto window = hann_window(spec.window_len);

  Spectrogram out;
  out.fs = spec.fs;
  out.dft_len = spec.dft_len;
  out.first_bin = 0;
  std::vector<double> buf(static_cast<std::size_t>(spec.dft_len), 0.0);
  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(bins));
  for (const auto& ch : signal.channels) {
    Eigen::MatrixXcd m(bins, frames);
    for (int t = 0; t < frames; ++t) {
      const std::size_t offset = static_cast<std::size_t>(t) * spec.hop;
      for (int n = 0; n < spec.window_len; ++n) buf[n] = window[n] * ch[offset + n];
      detail::rfft(buf, spectrum);
      for (int k = 0; k < bins; ++k) m(k, t) = spectrum[k];
    }
    out.channels.push_back(std::move(m));
  }
  return out;
}

Spectrogram stft_forward(const std::vector<double>& signal, const STFTSpec& spec) {
  MultiChannel mc;
  mc.fs = spec.fs;
  mc.channels.push_back(signal);
  return stft_forward(mc, spec);
}

Spectrogram select_band(const Spectrogram& spec, double f_lo, double f_hi) {
  if (!(f_lo >= 0.0 && f_lo < f_hi && f_hi <= spec.fs / 2.0))
    throw DomainError("band must satisfy 0 <= f_lo < f_hi <= fs/2");
  constexpr double kTol = 1e-9;
  int lo = -1;
  int hi = -1;
  for (int r = 0; r < spec.num_bins(); ++r) {
    const double f = spec.frequency(r);
    if (f >= f_lo - kTol && f <= f_hi + kTol) {
      if (lo < 0) lo = r;
      hi = r;
    }
  }
  if (lo < 0) throw InsufficientDataError("no STFT bin center inside the requested band");

  Spectrogram out;
  out.fs = spec.fs;
  out.dft_len = spec.dft_len;
  out.first_bin = spec.first_bin + lo;
  for (const auto& ch : spec.channels) out.channels.push_back(ch.middleRows(lo, hi - lo + 1));
  return out;
}

double spectrogram_energy(const Spectrogram& spec, int channel) {
  const auto& m = spec.channels.at(static_cast<std::size_t>(channel));
  const int nyquist = spec.dft_len / 2;
  double e = 0.0;
  for (int r = 0; r < m.rows(); ++r) {
    const int k = spec.first_bin + r;
    const double weight = (k == 0 || k == nyquist) ? 1.0 : 2.0;
    e += weight * m.row(r).squaredNorm();
  }
  return e / spec.dft_len;
}

void write_spectrogram_csv(const std::string& path, const Spectrogram& spec, int channel) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const auto& m = spec.channels.at(static_cast<std::size_t>(channel));
  f << "bin,frame,re,im\n" << std::setprecision(17);
  for (int r = 0; r < m.rows(); ++r)
    for (int t = 0; t < m.cols(); ++t)
      f << spec.first_bin + r << ',' << t << ',' << m(r, t).real() << ',' << m(r, t).imag() << '\n';
}

}  // namespace shdoa
