#include "shdoa/room_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "fft.hpp"
#include "shdoa/error.hpp"

namespace shdoa {

namespace {

constexpr int kFracDelayTaps = 8;

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// Hann-windowed sinc spread over kFracDelayTaps samples around `delay`.
void add_fractional_impulse(std::vector<double>& h, double delay, double gain) {
  const auto base = static_cast<long>(std::floor(delay));
  const double half = kFracDelayTaps / 2.0;
  for (long t = base - (kFracDelayTaps / 2 - 1); t <= base + kFracDelayTaps / 2; ++t) {
    if (t < 0 || t >= static_cast<long>(h.size())) continue;
    const double x = static_cast<double>(t) - delay;
    if (std::abs(x) >= half) continue;
    const double sinc = (x == 0.0) ? 1.0 : std::sin(kPi * x) / (kPi * x);
    const double window = 0.5 * (1.0 + std::cos(kPi * x / half));
    h[static_cast<std::size_t>(t)] += gain * sinc * window;
  }
}

double total_power(const MultiChannel& s) {
  double p = 0.0;
  for (const auto& ch : s.channels)
    for (double v : ch) p += v * v;
  return p;
}

// Two-pole resonator with coefficients updated block by block.
struct Resonator {
  double y1 = 0.0;
  double y2 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double gain = 1.0;

  void tune(double freq_hz, double bandwidth_hz, double fs) {
    const double r = std::exp(-kPi * bandwidth_hz / fs);
    const double w = 2.0 * kPi * freq_hz / fs;
    a1 = 2.0 * r * std::cos(w);
    a2 = -r * r;
    gain = 1.0 - r;
  }
  double step(double x) {
    const double y = gain * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

// Random walk clamped to [lo, hi].
double drift(std::mt19937_64& rng, double value, double step, double lo, double hi) {
  std::normal_distribution<double> n(0.0, step);
  value += n(rng);
  if (value < lo) value = 2.0 * lo - value;
  if (value > hi) value = 2.0 * hi - value;
  return std::clamp(value, lo, hi);
}

void normalize_rms(std::vector<double>& x, double target) {
  double p = 0.0;
  for (double v : x) p += v * v;
  if (x.empty() || p <= 0.0) return;
  const double g = target / std::sqrt(p / static_cast<double>(x.size()));
  for (double& v : x) v *= g;
}

std::size_t duration_samples(double duration_s, double fs) {
  if (!(duration_s > 0.0)) throw DomainError("signal duration must be positive");
  return static_cast<std::size_t>(std::llround(duration_s * fs));
}

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw IoError("unexpected end of WAV file");
  return v;
}

}  // namespace

double RoomConfig::reflection_coefficient() const {
  if (t60 <= 0.0) return 0.0;
  const double volume = dimensions[0] * dimensions[1] * dimensions[2];
  const double surface = 2.0 * (dimensions[0] * dimensions[1] + dimensions[0] * dimensions[2] +
                                dimensions[1] * dimensions[2]);
  const double alpha = 24.0 * std::log(10.0) * volume / (speed_of_sound * surface * t60);
  if (alpha > 1.0) throw ConfigError("T60 too short for this room volume (absorption > 1)");
  return std::sqrt(1.0 - alpha);
}

bool RoomConfig::contains(const Vec3& p) const {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] > 0.0 && p[i] < dimensions[i])) return false;
  return true;
}

void RoomConfig::validate() const {
  for (double d : dimensions)
    if (!(d > 0.0)) throw ConfigError("room dimensions must be positive");
  if (t60 < 0.0) throw ConfigError("t60 must be non-negative");
  if (!(speed_of_sound > 0.0)) throw ConfigError("speed of sound must be positive");
  (void)reflection_coefficient();
}

RoomConfig room_preset(const std::string& name) {
  RoomConfig r;
  if (name == "S1") {
    r.dimensions = {6.0, 4.0, 3.0};
    r.t60 = 0.2;
  } else if (name == "S2") {
    r.dimensions = {7.0, 6.0, 3.0};
    r.t60 = 0.3;
  } else if (name == "S3") {
    r.dimensions = {8.0, 6.0, 3.0};
    r.t60 = 0.5;
  } else if (name == "S2-large") {
    r.dimensions = {8.0, 8.0, 4.0};
    r.t60 = 0.3;
  } else if (name == "anechoic") {
    r.dimensions = {6.0, 4.0, 3.0};
    r.t60 = 0.0;
  } else {
    throw ConfigError("unknown room preset: " + name);
  }
  return r;
}

Vec3 ArrayConfig::mic_position(std::size_t q) const {
  const auto u = mic_directions.at(q).unit_vector();
  return {center[0] + radius * u[0], center[1] + radius * u[1], center[2] + radius * u[2]};
}

void ArrayConfig::validate() const {
  if (!(radius > 0.0)) throw ConfigError("array radius must be positive");
  if (mic_directions.empty()) throw ConfigError("array has no microphones");
  if (weights.size() != mic_directions.size())
    throw ConfigError("array needs one weight per microphone");
  for (const auto& d : mic_directions) d.validate();
}

ArrayConfig default_array(const Vec3& center, ArrayKind kind, double radius) {
  // Weights solve the order-1 quadrature conditions for this layout exactly.
  constexpr double kPoleWeight = 1.366146687209345;
  constexpr double kUpperRingWeight = 1.4192075615400432;
  constexpr double kLowerRingWeight = 1.3808484202474136;
  ArrayConfig a;
  a.radius = radius;
  a.kind = kind;
  a.center = center;
  a.mic_directions.push_back(Direction{0.0, 0.0});
  a.weights.push_back(kPoleWeight);
  for (double phi : {0.0, 90.0, 180.0, 270.0}) {
    a.mic_directions.push_back(Direction::from_degrees(69.0, phi));
    a.weights.push_back(kUpperRingWeight);
  }
  for (double phi : {45.0, 135.0, 225.0, 315.0}) {
    a.mic_directions.push_back(Direction::from_degrees(128.0, phi));
    a.weights.push_back(kLowerRingWeight);
  }
  return a;
}

Vec3 SourceSpec::position(const Vec3& array_center) const {
  const auto u = direction.unit_vector();
  return {array_center[0] + distance * u[0], array_center[1] + distance * u[1],
          array_center[2] + distance * u[2]};
}

std::vector<double> image_source_rir(const RoomConfig& room, const Vec3& src, const Vec3& mic,
                                     double fs) {
  room.validate();
  if (!room.contains(src)) throw DomainError("source position outside room");
  if (!room.contains(mic)) throw DomainError("microphone position outside room");
  if (!(fs > 0.0)) throw DomainError("sample rate must be positive");

  const double c = room.speed_of_sound;
  const double beta = room.reflection_coefficient();
  const Vec3 diff{src[0] - mic[0], src[1] - mic[1], src[2] - mic[2]};
  const double direct = norm3(diff);
  if (direct < 1e-9) throw DomainError("source and microphone coincide");

  std::size_t len = 0;
  if (room.rir_duration_s > 0.0) {
    len = static_cast<std::size_t>(std::ceil(room.rir_duration_s * fs));
  } else if (beta > 0.0) {
    len = static_cast<std::size_t>(std::ceil(1.2 * room.t60 * fs));
  }
  len = std::max(len, static_cast<std::size_t>(std::ceil(direct / c * fs)) + kFracDelayTaps);
  std::vector<double> h(len, 0.0);

  const double max_path = (static_cast<double>(len) + kFracDelayTaps) / fs * c;
  const int order_cap = (beta == 0.0) ? 0 : room.max_reflection_order;
  const auto& dim = room.dimensions;
  std::array<int, 3> n_max{};
  for (int a = 0; a < 3; ++a) n_max[a] = static_cast<int>(std::ceil(max_path / (2.0 * dim[a]))) + 1;

  // Precomputed beta^order.
  std::vector<double> beta_pow(static_cast<std::size_t>(2 * (n_max[0] + n_max[1] + n_max[2]) + 8),
                               1.0);
  for (std::size_t i = 1; i < beta_pow.size(); ++i) beta_pow[i] = beta_pow[i - 1] * beta;

  for (int nx = -n_max[0]; nx <= n_max[0]; ++nx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * src[0] + 2.0 * nx * dim[0] - mic[0];
      if (std::abs(dx) > max_path) continue;
      const int ox = std::abs(nx - qx) + std::abs(nx);
      for (int ny = -n_max[1]; ny <= n_max[1]; ++ny) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * src[1] + 2.0 * ny * dim[1] - mic[1];
          const double dxy2 = dx * dx + dy * dy;
          if (dxy2 > max_path * max_path) continue;
          const int oy = std::abs(ny - qy) + std::abs(ny);
          for (int nz = -n_max[2]; nz <= n_max[2]; ++nz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const int order = ox + oy + std::abs(nz - qz) + std::abs(nz);
              if (order_cap >= 0 && order > order_cap) continue;
              const double dz = (1 - 2 * qz) * src[2] + 2.0 * nz * dim[2] - mic[2];
              const double d = std::sqrt(dxy2 + dz * dz);
              const double delay = d / c * fs;
              if (delay - kFracDelayTaps / 2.0 >= static_cast<double>(len)) continue;
              const double gain = beta_pow[static_cast<std::size_t>(order)] / (4.0 * kPi * d);
              add_fractional_impulse(h, delay, gain);
            }
          }
        }
      }
    }
  }
  return h;
}

MultiChannel synthesize_mixture(const std::vector<SourceSpec>& sources, const RoomConfig& room,
                                const ArrayConfig& array) {
  array.validate();
  if (sources.empty()) throw InsufficientDataError("no sources to synthesize");
  const double fs = sources.front().signal.fs;
  std::size_t out_len = 0;
  for (const auto& s : sources) {
    if (s.signal.fs != fs) throw ConfigError("source sample rates differ");
    if (!(s.distance > array.radius)) throw ConfigError("source lies inside the array radius");
    out_len = std::max(out_len, s.signal.samples.size());
  }

  MultiChannel out;
  out.fs = fs;
  out.channels.assign(array.num_mics(), std::vector<double>(out_len, 0.0));
  for (const auto& s : sources) {
    const Vec3 pos = s.position(array.center);
    if (!room.contains(pos)) throw DomainError("source position outside room");
    std::vector<std::vector<double>> rirs;
    rirs.reserve(array.num_mics());
    for (std::size_t q = 0; q < array.num_mics(); ++q) {
      rirs.push_back(image_source_rir(room, pos, array.mic_position(q), fs));
      for (double& v : rirs.back()) v *= s.level;
    }
    const auto rendered = detail::convolve_many(s.signal.samples, rirs, out_len);
    for (std::size_t q = 0; q < array.num_mics(); ++q)
      for (std::size_t i = 0; i < out_len; ++i) out.channels[q][i] += rendered[q][i];
  }
  return out;
}

MultiChannel add_noise(const MultiChannel& signal, double snr_db, NoiseKind kind,
                       std::uint64_t seed, const std::optional<BabbleScene>& babble) {
  if (std::isinf(snr_db) && snr_db > 0.0) return signal;
  const double ps = total_power(signal);
  if (!(ps > 0.0)) throw DomainError("cannot set a finite SNR on a silent signal");

  MultiChannel noise;
  noise.fs = signal.fs;
  const std::size_t len = signal.length();
  if (kind == NoiseKind::white) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    noise.channels.assign(signal.num_channels(), std::vector<double>(len));
    for (auto& ch : noise.channels)
      for (double& v : ch) v = gauss(rng);
  } else {
    if (!babble) throw ConfigError("babble noise needs a room and array");
    if (babble->talkers < 4) throw ConfigError("babble needs at least 4 talkers");
    if (babble->array.num_mics() != signal.num_channels())
      throw ShapeError("babble array does not match the signal channel count");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SourceSpec> talkers;
    const double duration = static_cast<double>(len) / signal.fs;
    for (int t = 0; t < babble->talkers; ++t) {
      SourceSpec s;
      for (int attempt = 0;; ++attempt) {
        const double theta = std::acos(1.0 - 2.0 * unit(rng));
        const double phi = 2.0 * kPi * unit(rng);
        s.direction = Direction{theta, std::min(phi, std::nextafter(2.0 * kPi, 0.0))};
        s.distance = 1.0 + 1.5 * unit(rng);
        if (babble->room.contains(s.position(babble->array.center))) break;
        if (attempt > 1000) throw ConfigError("room too small to place babble talkers");
      }
      s.signal = gen_training_signal(duration, rng(), signal.fs);
      s.signal.samples.resize(len, 0.0);
      talkers.push_back(std::move(s));
    }
    noise = synthesize_mixture(talkers, babble->room, babble->array);
  }

  const double pn = total_power(noise);
  if (!(pn > 0.0)) throw DomainError("generated noise is silent");
  const double scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  MultiChannel out = signal;
  for (std::size_t q = 0; q < out.num_channels(); ++q)
    for (std::size_t i = 0; i < len; ++i) out.channels[q][i] += scale * noise.channels[q][i];
  return out;
}

Waveform gen_training_signal(double duration_s, std::uint64_t seed, double fs) {
  const std::size_t n = duration_samples(duration_s, fs);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto block = static_cast<std::size_t>(std::max(1.0, std::round(0.01 * fs)));
  double f1 = 300.0 + 600.0 * unit(rng);
  double f2 = 1000.0 + 1600.0 * unit(rng);
  double bw1 = 120.0;
  double bw2 = 180.0;
  Resonator r1;
  Resonator r2;

  // Piecewise-constant level targets, smoothed by a one-pole follower.
  double target = 1.0;
  std::size_t segment_left = 0;
  double env = 1.0;
  const double smooth = std::exp(-1.0 / (0.01 * fs));

  Waveform w;
  w.fs = fs;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % block == 0) {
      f1 = drift(rng, f1, 25.0, 250.0, 1000.0);
      f2 = drift(rng, f2, 40.0, 900.0, 2800.0);
      bw1 = drift(rng, bw1, 5.0, 60.0, 250.0);
      bw2 = drift(rng, bw2, 5.0, 80.0, 300.0);
      r1.tune(f1, bw1, fs);
      r2.tune(f2, bw2, fs);
    }
    if (segment_left == 0) {
      segment_left = static_cast<std::size_t>((0.05 + 0.25 * unit(rng)) * fs);
      const double level_db = (unit(rng) < 0.1) ? -40.0 : 8.0 * gauss(rng);
      target = std::pow(10.0, level_db / 20.0);
    }
    --segment_left;
    env = smooth * env + (1.0 - smooth) * target;
    const double e = gauss(rng);
    w.samples[i] = env * (r1.step(e) + 0.7 * r2.step(e));
  }
  normalize_rms(w.samples, 0.1);
  return w;
}

Waveform gen_speech_like_signal(double duration_s, std::uint64_t seed, double fs) {
  const std::size_t n = duration_samples(duration_s, fs);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  enum class Seg { voiced, unvoiced, pause };
  Seg seg = Seg::pause;
  std::size_t segment_left = 0;
  double target = 0.0;
  double env = 0.0;
  const double smooth = std::exp(-1.0 / (0.005 * fs));

  double f0 = 100.0 + 120.0 * unit(rng);
  double f0_glide = 0.0;
  double phase = 0.0;
  double formant[3] = {500.0, 1500.0, 2500.0};
  Resonator res[3];
  const auto block = static_cast<std::size_t>(std::max(1.0, std::round(0.01 * fs)));

  Waveform w;
  w.fs = fs;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (segment_left == 0) {
      const double u = unit(rng);
      if (u < 0.5) {
        seg = Seg::voiced;
        segment_left = static_cast<std::size_t>((0.08 + 0.22 * unit(rng)) * fs);
        target = std::pow(10.0, 4.0 * gauss(rng) / 20.0);
        f0 = 90.0 + 140.0 * unit(rng);
        f0_glide = (unit(rng) - 0.5) * 60.0 / static_cast<double>(segment_left);
        formant[0] = 300.0 + 600.0 * unit(rng);
        formant[1] = 900.0 + 1500.0 * unit(rng);
        formant[2] = 2300.0 + 700.0 * unit(rng);
      } else if (u < 0.7) {
        seg = Seg::unvoiced;
        segment_left = static_cast<std::size_t>((0.04 + 0.11 * unit(rng)) * fs);
        target = 0.3;
        formant[0] = 1500.0 + 1000.0 * unit(rng);
        formant[1] = 2500.0 + 1000.0 * unit(rng);
        formant[2] = 3500.0 + 1000.0 * unit(rng);
      } else {
        seg = Seg::pause;
        segment_left = static_cast<std::size_t>((0.05 + 0.2 * unit(rng)) * fs);
        target = 0.0;
      }
    }
    --segment_left;
    if (i % block == 0) {
      for (int k = 0; k < 3; ++k) {
        formant[k] = drift(rng, formant[k], 15.0, 200.0, 0.45 * fs);
        res[k].tune(formant[k], 80.0 + 40.0 * k, fs);
      }
    }
    double excitation = 0.0;
    if (seg == Seg::voiced) {
      f0 = std::clamp(f0 + f0_glide, 70.0, 300.0);
      phase += f0 / fs;
      if (phase >= 1.0) {
        phase -= 1.0;
        excitation = 1.0;
      }
      excitation += 0.02 * gauss(rng);
    } else {
      excitation = 0.1 * gauss(rng);
    }
    env = smooth * env + (1.0 - smooth) * target;
    const double y = res[0].step(excitation) + 0.6 * res[1].step(excitation) +
                     0.3 * res[2].step(excitation);
    w.samples[i] = env * y;
  }
  normalize_rms(w.samples, 0.1);
  return w;
}

void write_wav(const std::string& path, const MultiChannel& signal) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const auto channels = static_cast<std::uint16_t>(signal.num_channels());
  const auto frames = static_cast<std::uint32_t>(signal.length());
  const auto rate = static_cast<std::uint32_t>(std::lround(signal.fs));
  const std::uint32_t data_bytes = frames * channels * 4u;
  f.write("RIFF", 4);
  put<std::uint32_t>(f, 36u + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put<std::uint32_t>(f, 16u);
  put<std::uint16_t>(f, 3u);  // IEEE float
  put<std::uint16_t>(f, channels);
  put<std::uint32_t>(f, rate);
  put<std::uint32_t>(f, rate * channels * 4u);
  put<std::uint16_t>(f, static_cast<std::uint16_t>(channels * 4u));
  put<std::uint16_t>(f, 32u);
  f.write("data", 4);
  put<std::uint32_t>(f, data_bytes);
  for (std::uint32_t i = 0; i < frames; ++i)
    for (std::uint16_t q = 0; q < channels; ++q) put<float>(f, static_cast<float>(signal.channels[q][i]));
  if (!f) throw IoError("failed writing " + path);
}

MultiChannel read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char tag[4];
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "RIFF", 4) != 0) throw IoError("not a RIFF file: " + path);
  (void)get<std::uint32_t>(f);
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "WAVE", 4) != 0) throw IoError("not a WAVE file: " + path);

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  for (;;) {
    f.read(tag, 4);
    if (!f) throw IoError("WAV file has no data chunk: " + path);
    const auto size = get<std::uint32_t>(f);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = get<std::uint16_t>(f);
      channels = get<std::uint16_t>(f);
      rate = get<std::uint32_t>(f);
      (void)get<std::uint32_t>(f);
      (void)get<std::uint16_t>(f);
      bits = get<std::uint16_t>(f);
      f.seekg(static_cast<std::streamoff>(size) - 16, std::ios::cur);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (channels == 0) throw IoError("WAV data chunk before fmt chunk");
      const bool is_float = (format == 3 && bits == 32);
      const bool is_pcm16 = (format == 1 && bits == 16);
      if (!is_float && !is_pcm16) throw IoError("unsupported WAV sample format");
      const std::uint32_t frames = size / (channels * (bits / 8u));
      MultiChannel out;
      out.fs = rate;
      out.channels.assign(channels, std::vector<double>(frames));
      for (std::uint32_t i = 0; i < frames; ++i)
        for (std::uint16_t q = 0; q < channels; ++q)
          out.channels[q][i] = is_float ? static_cast<double>(get<float>(f))
                                        : get<std::int16_t>(f) / 32768.0;
      return out;
    } else {
      f.seekg(size + (size & 1u), std::ios::cur);
    }
  }
}

}  // namespace shdoa
