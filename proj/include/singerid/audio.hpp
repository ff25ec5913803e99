// singerid/audio.hpp

// Copyright 2026  The singerid authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SINGERID_AUDIO_HPP_
#define SINGERID_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "singerid/errors.hpp"

namespace singerid {

constexpr int kCanonicalSampleRate = 44100;

// Mono waveform, samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate_hz = kCanonicalSampleRate;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

  void validate() const {
    SINGERID_CHECK(sample_rate_hz > 0, DataError, "AudioClip: sample rate must be positive");
    for (float s : samples) {
      SINGERID_CHECK(s >= -1.0f && s <= 1.0f && std::isfinite(s), DataError,
                     "AudioClip: sample out of [-1, 1]");
    }
  }
};

inline float clamp_sample(float x) { return std::min(1.0f, std::max(-1.0f, x)); }

// Raw decoded WAV; may be multichannel. Samples are interleaved.
struct WavData {
  std::vector<float> samples;
  int channels = 1;
  int sample_rate_hz = 0;

  int64_t frames() const {
    return channels > 0 ? static_cast<int64_t>(samples.size()) / channels : 0;
  }

  AudioClip to_mono() const {
    AudioClip clip;
    clip.sample_rate_hz = sample_rate_hz;
    clip.samples.resize(frames());
    for (int64_t i = 0; i < frames(); ++i) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) acc += samples[i * channels + c];
      clip.samples[i] = clamp_sample(static_cast<float>(acc / channels));
    }
    return clip;
  }
};

namespace detail {

template <typename T>
T read_le(const uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;  // assumes little-endian host, checked in read_wav/write_wav
}

inline bool host_is_little_endian() {
  const uint32_t probe = 1;
  uint8_t b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

}  // namespace detail

// Reads a PCM WAV file. Supported encodings: 16-bit integer and 32-bit float
// (format tags 1 and 3, plus the extensible wrapper around them).
inline WavData read_wav(const std::string& path) {
  SINGERID_CHECK(detail::host_is_little_endian(), Error, "read_wav: big-endian hosts unsupported");
  std::ifstream in(path, std::ios::binary);
  SINGERID_CHECK(in.good(), DataError, "read_wav: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  SINGERID_CHECK(bytes.size() >= 44, DataError, "read_wav: truncated file " + path);
  SINGERID_CHECK(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                     std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
                 DataError, "read_wav: not a RIFF/WAVE file: " + path);

  WavData wav;
  uint16_t format_tag = 0;
  uint16_t bits = 0;
  size_t pos = 12;
  const uint8_t* data_ptr = nullptr;
  size_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t len = detail::read_le<uint32_t>(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    SINGERID_CHECK(body + len <= bytes.size(), DataError, "read_wav: corrupt chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      SINGERID_CHECK(len >= 16, DataError, "read_wav: short fmt chunk in " + path);
      format_tag = detail::read_le<uint16_t>(bytes.data() + body);
      wav.channels = detail::read_le<uint16_t>(bytes.data() + body + 2);
      wav.sample_rate_hz = static_cast<int>(detail::read_le<uint32_t>(bytes.data() + body + 4));
      bits = detail::read_le<uint16_t>(bytes.data() + body + 14);
      if (format_tag == 0xFFFE && len >= 40) {
        format_tag = detail::read_le<uint16_t>(bytes.data() + body + 24);  // SubFormat GUID head
      }
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  SINGERID_CHECK(data_ptr != nullptr, DataError, "read_wav: no data chunk in " + path);
  SINGERID_CHECK(wav.channels >= 1, DataError, "read_wav: bad channel count in " + path);

  if (format_tag == 1 && bits == 16) {
    const size_t n = data_len / 2;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const int16_t v = detail::read_le<int16_t>(data_ptr + 2 * i);
      wav.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format_tag == 3 && bits == 32) {
    const size_t n = data_len / 4;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      wav.samples[i] = clamp_sample(detail::read_le<float>(data_ptr + 4 * i));
    }
  } else {
    throw DataError("read_wav: unsupported encoding (want PCM16 or float32): " + path);
  }
  return wav;
}

// Writes a mono 16-bit PCM WAV. Samples are scaled by 32768 and clamped, so
// a file read with read_wav round-trips bit-exactly.
inline void write_wav_int16(const std::string& path, const AudioClip& clip) {
  SINGERID_CHECK(detail::host_is_little_endian(), Error, "write_wav: big-endian hosts unsupported");
  std::ofstream out(path, std::ios::binary);
  SINGERID_CHECK(out.good(), DataError, "write_wav: cannot open " + path);

  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  const uint32_t data_len = n * 2;
  const uint32_t sr = static_cast<uint32_t>(clip.sample_rate_hz);

  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);   // PCM
  put_u16(1);   // mono
  put_u32(sr);
  put_u32(sr * 2);  // byte rate
  put_u16(2);   // block align
  put_u16(16);  // bits
  out.write("data", 4);
  put_u32(data_len);
  for (uint32_t i = 0; i < n; ++i) {
    const double scaled = std::lround(static_cast<double>(clip.samples[i]) * 32768.0);
    const int16_t v = static_cast<int16_t>(std::min(32767.0, std::max(-32768.0, scaled)));
    out.write(reinterpret_cast<const char*>(&v), 2);
  }
  SINGERID_CHECK(out.good(), DataError, "write_wav: write failed for " + path);
}

// Linear-interpolation resampler. Only used when a manifest explicitly opts
// into rate conversion; quality is adequate for preprocessing, not mastering.
inline AudioClip resample_linear(const AudioClip& clip, int target_rate_hz) {
  SINGERID_CHECK(target_rate_hz > 0, ConfigError, "resample: target rate must be positive");
  if (clip.sample_rate_hz == target_rate_hz || clip.samples.empty()) {
    AudioClip out = clip;
    out.sample_rate_hz = target_rate_hz;
    return out;
  }
  const double ratio = static_cast<double>(clip.sample_rate_hz) / target_rate_hz;
  const int64_t n_out =
      static_cast<int64_t>(std::floor((clip.samples.size() - 1) / ratio)) + 1;
  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(n_out);
  for (int64_t i = 0; i < n_out; ++i) {
    const double t = i * ratio;
    const int64_t i0 = static_cast<int64_t>(t);
    const int64_t i1 = std::min<int64_t>(i0 + 1, clip.samples.size() - 1);
    const double frac = t - i0;
    out.samples[i] = clamp_sample(
        static_cast<float>((1.0 - frac) * clip.samples[i0] + frac * clip.samples[i1]));
  }
  return out;
}

}  // namespace singerid

#endif  // SINGERID_AUDIO_HPP_
