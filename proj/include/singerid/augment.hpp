// singerid/augment.hpp

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

// Waveform-domain augmentations that preserve singer identity while varying
// level, content, and pitch. All functions are pure given an explicit Rng,
// and every path preserves the input length.

#ifndef SINGERID_AUGMENT_HPP_
#define SINGERID_AUGMENT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "singerid/audio.hpp"
#include "singerid/errors.hpp"
#include "singerid/rng.hpp"

namespace singerid {

struct AugmentationConfig {
  double p_apply = 0.5;  // per-augmentation application probability
  double gain_min_db = -6.0;
  double gain_max_db = 0.0;
  double time_mask_max_fraction = 1.0 / 8.0;
  double noise_snr_min_db = 10.0;
  double noise_snr_max_db = 40.0;
  double pitch_shift_ratio_min = 1.0;
  double pitch_shift_ratio_max = 3.0;
  double pitch_range_ratio_min = 1.0;
  double pitch_range_ratio_max = 1.5;
  std::string pitch_shifter = "identity";  // identity | resample | command:<template>

  void validate() const {
    SINGERID_CHECK(p_apply >= 0.0 && p_apply <= 1.0, ConfigError,
                   "AugmentationConfig: p_apply must be in [0, 1]");
    SINGERID_CHECK(gain_min_db <= gain_max_db, ConfigError,
                   "AugmentationConfig: gain_min_db must not exceed gain_max_db");
    SINGERID_CHECK(time_mask_max_fraction > 0.0 && time_mask_max_fraction <= 1.0, ConfigError,
                   "AugmentationConfig: time_mask_max_fraction must be in (0, 1]");
    SINGERID_CHECK(noise_snr_min_db <= noise_snr_max_db, ConfigError,
                   "AugmentationConfig: noise SNR range is inverted");
    SINGERID_CHECK(pitch_shift_ratio_min > 0.0 && pitch_range_ratio_min > 0.0, ConfigError,
                   "AugmentationConfig: pitch ratios must be positive");
    SINGERID_CHECK(pitch_shift_ratio_min <= pitch_shift_ratio_max &&
                       pitch_range_ratio_min <= pitch_range_ratio_max,
                   ConfigError, "AugmentationConfig: pitch ratio range is inverted");
  }
};

// Multiplies by 10^(gain_db/20) and clamps to [-1, 1].
inline std::vector<float> apply_gain(const std::vector<float>& x, double gain_db) {
  const float scale = static_cast<float>(std::pow(10.0, gain_db / 20.0));
  std::vector<float> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = clamp_sample(x[i] * scale);
  return y;
}

// Adds zero-mean Gaussian noise at the requested signal-to-noise ratio.
// All-zero input is returned unchanged (SNR undefined).
inline std::vector<float> add_gaussian_noise(const std::vector<float>& x, double snr_db,
                                             Rng& rng) {
  double power = 0.0;
  for (float v : x) power += static_cast<double>(v) * v;
  if (x.empty() || power == 0.0) return x;
  power /= static_cast<double>(x.size());
  const double noise_std = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::vector<float> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = clamp_sample(x[i] + static_cast<float>(noise_std * rng.normal()));
  }
  return y;
}

// Zeros one contiguous region. The length is uniform in {0..floor(len*max_fraction)}
// and the offset uniform over valid positions.
inline std::vector<float> time_mask(const std::vector<float>& x, Rng& rng,
                                    double max_fraction = 1.0 / 8.0) {
  SINGERID_CHECK(x.size() >= 8, DataError, "time_mask: input too short");
  const uint64_t max_len = static_cast<uint64_t>(static_cast<double>(x.size()) * max_fraction);
  const uint64_t len = rng.uniform_int(max_len + 1);
  std::vector<float> y = x;
  if (len == 0) return y;
  const uint64_t offset = rng.uniform_int(x.size() - len + 1);
  std::fill(y.begin() + offset, y.begin() + offset + len, 0.0f);
  return y;
}

// Pitch-shift hook. Implementations must return a waveform of the same
// length and sample rate, and are expected to preserve the spectral envelope
// (formants); the toolkit itself ships an identity stub, a naive resampling
// shifter, and a subprocess bridge for external engines.
class PitchShifter {
 public:
  virtual ~PitchShifter() = default;
  virtual std::vector<float> shift(const std::vector<float>& x, int sample_rate_hz,
                                   double shift_ratio, double range_ratio) const = 0;
  virtual std::string name() const = 0;
};

class IdentityPitchShifter : public PitchShifter {
 public:
  std::vector<float> shift(const std::vector<float>& x, int, double, double) const override {
    return x;
  }
  std::string name() const override { return "identity"; }
};

// Naive linear-interpolation resampler. Transposes formants along with the
// pitch, so it is not the default; useful as a conforming reference for the
// hook contract.
class ResamplingPitchShifter : public PitchShifter {
 public:
  std::vector<float> shift(const std::vector<float>& x, int, double shift_ratio,
                           double) const override {
    SINGERID_CHECK(shift_ratio > 0.0, ConfigError, "pitch_shift: ratio must be positive");
    if (x.empty() || shift_ratio == 1.0) return x;
    std::vector<float> y(x.size(), 0.0f);
    for (size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i) * shift_ratio;
      const size_t i0 = static_cast<size_t>(t);
      if (i0 + 1 >= x.size()) break;  // remainder stays zero-padded
      const double frac = t - static_cast<double>(i0);
      y[i] = clamp_sample(static_cast<float>((1.0 - frac) * x[i0] + frac * x[i0 + 1]));
    }
    return y;
  }
  std::string name() const override { return "resample"; }
};

// Bridges to an external engine via a shell command. The template may use
// {in}, {out}, {sr}, {shift}, {range}; input/output are mono PCM16 WAVs.
class CommandPitchShifter : public PitchShifter {
 public:
  explicit CommandPitchShifter(std::string command_template)
      : template_(std::move(command_template)) {}

  std::vector<float> shift(const std::vector<float>& x, int sample_rate_hz, double shift_ratio,
                           double range_ratio) const override {
    const std::string base = temp_base();
    const std::string in_path = base + "_in.wav";
    const std::string out_path = base + "_out.wav";
    AudioClip clip{x, sample_rate_hz};
    write_wav_int16(in_path, clip);
    std::string cmd = template_;
    replace_all(cmd, "{in}", in_path);
    replace_all(cmd, "{out}", out_path);
    replace_all(cmd, "{sr}", std::to_string(sample_rate_hz));
    replace_all(cmd, "{shift}", format_double(shift_ratio));
    replace_all(cmd, "{range}", format_double(range_ratio));
    const int rc = std::system(cmd.c_str());
    std::remove(in_path.c_str());
    if (rc != 0) {
      std::remove(out_path.c_str());
      throw DataError("pitch_shift command failed (exit " + std::to_string(rc) + "): " + cmd);
    }
    WavData wav = read_wav(out_path);
    std::remove(out_path.c_str());
    AudioClip mono = wav.to_mono();
    SINGERID_CHECK(mono.samples.size() == x.size(), DataError,
                   "pitch_shift command changed the waveform length");
    return mono.samples;
  }

  std::string name() const override { return "command"; }

 private:
  static void replace_all(std::string& s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  }
  static std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string temp_base() {
    static std::atomic<uint64_t> counter{0};
    const char* tmp = std::getenv("TMPDIR");
    const std::string dir = tmp ? tmp : "/tmp";
    return dir + "/singerid_ps_" + std::to_string(counter.fetch_add(1)) + "_" +
           std::to_string(reinterpret_cast<uintptr_t>(&counter) & 0xFFFF);
  }

  std::string template_;
};

inline std::shared_ptr<const PitchShifter> make_pitch_shifter(const std::string& spec) {
  if (spec.empty() || spec == "identity") return std::make_shared<IdentityPitchShifter>();
  if (spec == "resample") return std::make_shared<ResamplingPitchShifter>();
  if (spec.rfind("command:", 0) == 0) {
    return std::make_shared<CommandPitchShifter>(spec.substr(8));
  }
  throw ConfigError("unknown pitch shifter '" + spec +
                    "' (expected identity, resample, or command:<template>)");
}

// Draws (shift_ratio, range_ratio) from their uniform ranges, then takes the
// reciprocal of both with probability 1/2 so up- and downward shifts are
// balanced in log space.
inline std::pair<double, double> sample_pitch_ratios(const AugmentationConfig& cfg, Rng& rng) {
  double shift = rng.uniform(cfg.pitch_shift_ratio_min, cfg.pitch_shift_ratio_max);
  double range = rng.uniform(cfg.pitch_range_ratio_min, cfg.pitch_range_ratio_max);
  if (rng.uniform() < 0.5) {
    shift = 1.0 / shift;
    range = 1.0 / range;
  }
  return {shift, range};
}

// Applies each augmentation independently with probability p_apply, in the
// fixed order gain -> pitch shift -> noise -> time mask. A failing pitch
// hook skips that augmentation; everything else is deterministic given rng.
inline std::vector<float> augment(const std::vector<float>& x, const AugmentationConfig& cfg,
                                  Rng& rng, const PitchShifter& shifter,
                                  int sample_rate_hz = kCanonicalSampleRate) {
  cfg.validate();
  std::vector<float> y = x;

  if (rng.uniform() < cfg.p_apply) {
    y = apply_gain(y, rng.uniform(cfg.gain_min_db, cfg.gain_max_db));
  }
  if (rng.uniform() < cfg.p_apply) {
    const auto [shift, range] = sample_pitch_ratios(cfg, rng);
    try {
      std::vector<float> shifted = shifter.shift(y, sample_rate_hz, shift, range);
      SINGERID_CHECK(shifted.size() == y.size(), DataError,
                     "pitch shifter changed the waveform length");
      y = std::move(shifted);
    } catch (const Error&) {
      // hook failure: skip this augmentation, keep y as-is
    }
  }
  if (rng.uniform() < cfg.p_apply) {
    y = add_gaussian_noise(y, rng.uniform(cfg.noise_snr_min_db, cfg.noise_snr_max_db), rng);
  }
  if (rng.uniform() < cfg.p_apply) {
    y = time_mask(y, rng, cfg.time_mask_max_fraction);
  }
  return y;
}

}  // namespace singerid

#endif  // SINGERID_AUGMENT_HPP_
