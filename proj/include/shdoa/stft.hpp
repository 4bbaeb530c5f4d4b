#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shdoa/room_sim.hpp"

namespace shdoa {

/// STFT framing: 16 ms periodic Hann window, 50% overlap, 256-point DFT at 16 kHz.
struct STFTSpec {
  double fs = kDefaultSampleRate;
  int window_len = 256;
  int hop = 128;
  int dft_len = 256;

  [[nodiscard]] double bin_hz() const { return fs / dft_len; }
  void validate() const;
};

/// Periodic Hann window of the given length.
std::vector<double> hann_window(int length);

/// Multichannel spectrogram. Each channel is a [num_bins x num_frames]
/// complex matrix; row r holds absolute DFT bin first_bin + r.
struct Spectrogram {
  double fs = kDefaultSampleRate;
  int dft_len = 256;
  int first_bin = 0;
  std::vector<Eigen::MatrixXcd> channels;

  [[nodiscard]] int num_bins() const {
    return channels.empty() ? 0 : static_cast<int>(channels.front().rows());
  }
  [[nodiscard]] int num_frames() const {
    return channels.empty() ? 0 : static_cast<int>(channels.front().cols());
  }
  [[nodiscard]] double bin_hz() const { return fs / dft_len; }
  /// Center frequency of local row r.
  [[nodiscard]] double frequency(int r) const { return (first_bin + r) * bin_hz(); }
};

/// Overlapped windowed DFT; frame t covers samples [t*hop, t*hop + window_len).
Spectrogram stft_forward(const std::vector<double>& signal, const STFTSpec& spec);
Spectrogram stft_forward(const MultiChannel& signal, const STFTSpec& spec);

/// Keeps bins whose center frequency lies in [f_lo, f_hi] (both inclusive).
Spectrogram select_band(const Spectrogram& spec, double f_lo, double f_hi);

/// One-sided energy of a channel, weighted so that it equals the windowed
/// time-domain energy (Parseval) for a full-band spectrogram.
double spectrogram_energy(const Spectrogram& spec, int channel);

/// Debug dump of one channel: rows "bin,frame,re,im".
void write_spectrogram_csv(const std::string& path, const Spectrogram& spec, int channel);

}  // namespace shdoa
