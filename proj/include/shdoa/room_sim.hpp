#pragma once

// Shoebox room simulation with the image-source method, microphone array
// geometry, noise and synthetic excitation signals.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shdoa/sph_math.hpp"

namespace shdoa {

using Vec3 = std::array<double, 3>;

inline constexpr double kDefaultSampleRate = 16000.0;
inline constexpr double kDefaultSpeedOfSound = 343.0;

struct RoomConfig {
  Vec3 dimensions{6.0, 4.0, 3.0};
  double t60 = 0.0;  ///< seconds; 0 means anechoic (direct path only)
  double speed_of_sound = kDefaultSpeedOfSound;
  int max_reflection_order = -1;  ///< -1: every image inside the RIR length
  double rir_duration_s = 0.0;    ///< 0: automatic (1.2 T60, or direct path only)

  /// Uniform wall pressure reflection coefficient from Sabine's formula.
  [[nodiscard]] double reflection_coefficient() const;
  [[nodiscard]] bool contains(const Vec3& p) const;
  void validate() const;
};

/// Named rooms: "S1", "S2", "S3" and "S2-large" (8 x 8 x 4 m, T60 300 ms).
RoomConfig room_preset(const std::string& name);

struct ArrayConfig {
  double radius = 0.042;
  ArrayKind kind = ArrayKind::open;
  std::vector<Direction> mic_directions;
  std::vector<double> weights;
  Vec3 center{0.0, 0.0, 0.0};

  [[nodiscard]] std::size_t num_mics() const { return mic_directions.size(); }
  [[nodiscard]] Vec3 mic_position(std::size_t q) const;
  void validate() const;
};

/// Shipped 9-microphone grid (a pole plus two staggered rings of four) with
/// frozen quadrature weights that integrate every product of order <= 1
/// harmonics exactly.
ArrayConfig default_array(const Vec3& center, ArrayKind kind = ArrayKind::open,
                          double radius = 0.042);

/// Mono signal at a sample rate.
struct Waveform {
  double fs = kDefaultSampleRate;
  std::vector<double> samples;
};

/// Q-channel signal, one vector per microphone, all of the same length.
struct MultiChannel {
  double fs = kDefaultSampleRate;
  std::vector<std::vector<double>> channels;

  [[nodiscard]] std::size_t num_channels() const { return channels.size(); }
  [[nodiscard]] std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
};

struct SourceSpec {
  Direction direction;     ///< relative to the array center
  double distance = 1.0;   ///< meters from the array center
  Waveform signal;
  double level = 1.0;      ///< linear gain applied to the signal

  [[nodiscard]] Vec3 position(const Vec3& array_center) const;
};

/// Room impulse response between a source and a receiver position.
std::vector<double> image_source_rir(const RoomConfig& room, const Vec3& src, const Vec3& mic,
                                     double fs);

/// Reverberant multichannel signal: per microphone, the sum over sources of
/// the RIR-convolved, level-scaled source signal. The output is as long as
/// the longest source signal.
MultiChannel synthesize_mixture(const std::vector<SourceSpec>& sources, const RoomConfig& room,
                                const ArrayConfig& array);

enum class NoiseKind { white, babble };

/// Scene needed to render babble noise.
struct BabbleScene {
  RoomConfig room;
  ArrayConfig array;
  int talkers = 6;
};

/// Adds noise scaled so that total signal power over total noise power
/// equals snr_db. snr_db = +inf returns the input unchanged.
MultiChannel add_noise(const MultiChannel& signal, double snr_db, NoiseKind kind,
                       std::uint64_t seed, const std::optional<BabbleScene>& babble = std::nullopt);

/// Non-white random excitation with PSD varying in time and frequency:
/// amplitude-modulated noise through a two-resonance all-pole filter whose
/// resonances drift randomly.
Waveform gen_training_signal(double duration_s, std::uint64_t seed,
                             double fs = kDefaultSampleRate);

/// Speech-like excitation: voiced (harmonic) and unvoiced segments with
/// drifting formants and pauses, giving the time-frequency sparsity of speech.
Waveform gen_speech_like_signal(double duration_s, std::uint64_t seed,
                                double fs = kDefaultSampleRate);

/// Writes a 32-bit float WAV file.
void write_wav(const std::string& path, const MultiChannel& signal);
/// Reads a 32-bit float or 16-bit PCM WAV file.
MultiChannel read_wav(const std::string& path);

}  // namespace shdoa
