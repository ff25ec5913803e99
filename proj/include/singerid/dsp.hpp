// singerid/dsp.hpp

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

#ifndef SINGERID_DSP_HPP_
#define SINGERID_DSP_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "singerid/audio.hpp"
#include "singerid/errors.hpp"

namespace singerid {

struct FeatureConfig {
  int n_mels = 80;
  int window = 2048;
  int hop = 512;
  double f_min = 0.0;
  double f_max = 0.0;       // 0 means Nyquist
  double log_floor = 1e-10; // added inside the log; keeps silence finite

  void validate(int sample_rate_hz) const {
    SINGERID_CHECK(n_mels > 0 && window > 0 && hop > 0, ConfigError,
                   "FeatureConfig: n_mels/window/hop must be positive");
    const double fmax = f_max > 0.0 ? f_max : sample_rate_hz / 2.0;
    SINGERID_CHECK(f_min >= 0.0 && f_min < fmax && fmax <= sample_rate_hz / 2.0, ConfigError,
                   "FeatureConfig: need 0 <= f_min < f_max <= sample_rate/2");
    SINGERID_CHECK(log_floor > 0.0, ConfigError, "FeatureConfig: log_floor must be positive");
  }
};

// Log-compressed mel energies, one column per frame.
struct MelSpectrogram {
  Eigen::MatrixXf values;  // n_mels x frames
  int window_samples = 2048;
  int frame_hop_samples = 512;
  int sample_rate_hz = kCanonicalSampleRate;

  int bins() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
};

// Number of analysis frames with no padding: frames that would overrun the
// clip are dropped.
inline int64_t stft_num_frames(int64_t n_samples, int window, int hop) {
  if (n_samples < window) return 0;
  return (n_samples - window) / hop + 1;
}

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Radix-2 FFT plan with a naive-DFT fallback for non-power-of-two sizes.
// The power-of-two path is an iterative Cooley-Tukey on split re/im arrays;
// the fallback is only intended for small test configurations.
template <typename T>
class FftPlan {
 public:
  explicit FftPlan(int n) : n_(n) {
    SINGERID_CHECK(n >= 1, ConfigError, "FftPlan: size must be >= 1");
    if (is_pow2(n_) && n_ > 1) {
      bitrev_.resize(n_);
      int log2n = 0;
      while ((1 << log2n) < n_) ++log2n;
      for (int i = 0; i < n_; ++i) {
        int r = 0;
        for (int b = 0; b < log2n; ++b) r |= ((i >> b) & 1) << (log2n - 1 - b);
        bitrev_[i] = r;
      }
      tw_re_.resize(n_ / 2);
      tw_im_.resize(n_ / 2);
      for (int k = 0; k < n_ / 2; ++k) {
        const double ang = -2.0 * M_PI * k / n_;
        tw_re_[k] = static_cast<T>(std::cos(ang));
        tw_im_[k] = static_cast<T>(std::sin(ang));
      }
    }
  }

  int size() const { return n_; }

  // In-place forward DFT on split real/imag arrays of length n.
  void forward(T* re, T* im) const {
    if (n_ == 1) return;
    if (!bitrev_.empty()) {
      fft_pow2(re, im);
    } else {
      dft_naive(re, im);
    }
  }

 private:
  void fft_pow2(T* re, T* im) const {
    for (int i = 0; i < n_; ++i) {
      const int j = bitrev_[i];
      if (j > i) {
        std::swap(re[i], re[j]);
        std::swap(im[i], im[j]);
      }
    }
    for (int len = 2; len <= n_; len <<= 1) {
      const int half = len >> 1;
      const int step = n_ / len;
      for (int base = 0; base < n_; base += len) {
        for (int k = 0; k < half; ++k) {
          const T wr = tw_re_[k * step];
          const T wi = tw_im_[k * step];
          const int a = base + k;
          const int b = a + half;
          const T tr = re[b] * wr - im[b] * wi;
          const T ti = re[b] * wi + im[b] * wr;
          re[b] = re[a] - tr;
          im[b] = im[a] - ti;
          re[a] += tr;
          im[a] += ti;
        }
      }
    }
  }

  void dft_naive(T* re, T* im) const {
    std::vector<T> or_(n_), oi_(n_);
    for (int k = 0; k < n_; ++k) {
      double sr = 0.0, si = 0.0;
      for (int t = 0; t < n_; ++t) {
        const double ang = -2.0 * M_PI * (static_cast<int64_t>(k) * t % n_) / n_;
        const double c = std::cos(ang), s = std::sin(ang);
        sr += re[t] * c - im[t] * s;
        si += re[t] * s + im[t] * c;
      }
      or_[k] = static_cast<T>(sr);
      oi_[k] = static_cast<T>(si);
    }
    std::copy(or_.begin(), or_.end(), re);
    std::copy(oi_.begin(), oi_.end(), im);
  }

  int n_;
  std::vector<int> bitrev_;
  std::vector<T> tw_re_, tw_im_;
};

// Real-input FFT of even length n via a complex FFT of length n/2.
// Produces the one-sided spectrum, bins 0..n/2.
template <typename T>
class RealFft {
 public:
  explicit RealFft(int n) : n_(n), half_(n / 2), plan_(n / 2) {
    SINGERID_CHECK(n >= 2 && n % 2 == 0, ConfigError, "RealFft: size must be even and >= 2");
    un_re_.resize(half_ + 1);
    un_im_.resize(half_ + 1);
    for (int k = 0; k <= half_; ++k) {
      const double ang = -2.0 * M_PI * k / n_;
      un_re_[k] = static_cast<T>(std::cos(ang));
      un_im_[k] = static_cast<T>(std::sin(ang));
    }
    buf_re_.resize(half_);
    buf_im_.resize(half_);
  }

  int size() const { return n_; }
  int bins() const { return half_ + 1; }

  // x: n real samples. out_re/out_im: n/2+1 bins.
  void forward(const T* x, T* out_re, T* out_im) {
    for (int k = 0; k < half_; ++k) {
      buf_re_[k] = x[2 * k];
      buf_im_[k] = x[2 * k + 1];
    }
    plan_.forward(buf_re_.data(), buf_im_.data());
    // Unpack: X[k] = E[k] + w^k O[k] with E/O from the packed transform.
    for (int k = 0; k <= half_; ++k) {
      const int kk = k % half_;        // C[half] wraps to C[0]
      const int km = (half_ - k) % half_;
      const T cr = buf_re_[kk], ci = buf_im_[kk];
      const T mr = buf_re_[km], mi = -buf_im_[km];  // conj(C[N-k])
      const T er = T(0.5) * (cr + mr);
      const T ei = T(0.5) * (ci + mi);
      // O[k] = (C[k] - conj(C[N-k])) / (2i)
      const T odr = T(0.5) * (ci - mi);
      const T odi = T(-0.5) * (cr - mr);
      out_re[k] = er + un_re_[k] * odr - un_im_[k] * odi;
      out_im[k] = ei + un_re_[k] * odi + un_im_[k] * odr;
    }
  }

 private:
  int n_, half_;
  FftPlan<T> plan_;
  std::vector<T> un_re_, un_im_, buf_re_, buf_im_;
};

template <typename T>
std::vector<T> periodic_hann(int n) {
  std::vector<T> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = static_cast<T>(0.5 * (1.0 - std::cos(2.0 * M_PI * i / n)));
  }
  return w;
}

}  // namespace detail

// Short-time Fourier transform with a periodic Hann window and no padding.
// Column k is the one-sided spectrum of the frame starting at sample k*hop.
inline Eigen::MatrixXcd stft(const AudioClip& clip, int window, int hop) {
  SINGERID_CHECK(window > 0 && hop > 0, ConfigError, "stft: window and hop must be positive");
  SINGERID_CHECK(clip.size() >= window, DataError,
                 "stft: clip shorter than one analysis window");
  const int64_t frames = stft_num_frames(clip.size(), window, hop);
  const int bins = window / 2 + 1;
  const auto win = detail::periodic_hann<double>(window);
  Eigen::MatrixXcd out(bins, frames);

  if (window % 2 == 0) {
    detail::RealFft<double> fft(window);
    std::vector<double> frame(window), re(bins), im(bins);
    for (int64_t f = 0; f < frames; ++f) {
      const float* src = clip.samples.data() + f * hop;
      for (int i = 0; i < window; ++i) frame[i] = static_cast<double>(src[i]) * win[i];
      fft.forward(frame.data(), re.data(), im.data());
      for (int b = 0; b < bins; ++b) out(b, f) = std::complex<double>(re[b], im[b]);
    }
  } else {
    detail::FftPlan<double> fft(window);
    std::vector<double> re(window), im(window);
    for (int64_t f = 0; f < frames; ++f) {
      const float* src = clip.samples.data() + f * hop;
      for (int i = 0; i < window; ++i) {
        re[i] = static_cast<double>(src[i]) * win[i];
        im[i] = 0.0;
      }
      fft.forward(re.data(), im.data());
      for (int b = 0; b < bins; ++b) out(b, f) = std::complex<double>(re[b], im[b]);
    }
  }
  return out;
}

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank, n_mels x (n_fft/2 + 1). Filters are unit-peak
// triangles with centers equally spaced on the mel scale.
inline Eigen::MatrixXd mel_filterbank(int n_fft, int n_mels, int sample_rate_hz, double f_min,
                                      double f_max) {
  SINGERID_CHECK(n_fft > 0 && n_mels > 0 && sample_rate_hz > 0, ConfigError,
                 "mel_filterbank: sizes must be positive");
  if (f_max <= 0.0) f_max = sample_rate_hz / 2.0;
  SINGERID_CHECK(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate_hz / 2.0 + 1e-9,
                 ConfigError, "mel_filterbank: need 0 <= f_min < f_max <= sample_rate/2");

  const int bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate_hz / n_fft;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f >= center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      fb(m, b) = w;
    }
    SINGERID_CHECK(fb.row(m).sum() > 0.0, ConfigError,
                   "mel_filterbank: filter " + std::to_string(m) +
                       " has empty support; lower n_mels or raise n_fft");
  }
  return fb;
}

// Streaming log-mel extractor. Precomputes the window, FFT plan, and a
// sparse form of the filterbank (each row touches a short contiguous run of
// FFT bins), which keeps the per-frame cost far below a dense product.
class MelExtractor {
 public:
  MelExtractor(const FeatureConfig& cfg, int sample_rate_hz)
      : cfg_(cfg), sample_rate_(sample_rate_hz) {
    cfg.validate(sample_rate_hz);
    const double fmax = cfg.f_max > 0.0 ? cfg.f_max : sample_rate_hz / 2.0;
    const Eigen::MatrixXd fb =
        mel_filterbank(cfg.window, cfg.n_mels, sample_rate_hz, cfg.f_min, fmax);
    filters_.resize(cfg.n_mels);
    for (int m = 0; m < cfg.n_mels; ++m) {
      int first = -1, last = -1;
      for (int b = 0; b < fb.cols(); ++b) {
        if (fb(m, b) > 0.0) {
          if (first < 0) first = b;
          last = b;
        }
      }
      filters_[m].first_bin = first;
      filters_[m].weights.assign(fb.row(m).segment(first, last - first + 1).begin(),
                                 fb.row(m).segment(first, last - first + 1).end());
    }
    window_ = detail::periodic_hann<float>(cfg.window);
    if (cfg.window % 2 == 0) rfft_ = std::make_unique<detail::RealFft<float>>(cfg.window);
  }

  const FeatureConfig& config() const { return cfg_; }
  int sample_rate() const { return sample_rate_; }

  // Log-mel of a raw sample span. Throws if shorter than one window.
  Eigen::MatrixXf extract(const float* samples, int64_t n) const {
    SINGERID_CHECK(n >= cfg_.window, DataError, "log_mel: clip shorter than one analysis window");
    const int64_t frames = stft_num_frames(n, cfg_.window, cfg_.hop);
    const int bins = cfg_.window / 2 + 1;
    Eigen::MatrixXf out(cfg_.n_mels, frames);

    std::vector<float> frame(cfg_.window), re(bins), im(bins), power(bins);
    for (int64_t f = 0; f < frames; ++f) {
      const float* src = samples + f * cfg_.hop;
      for (int i = 0; i < cfg_.window; ++i) frame[i] = src[i] * window_[i];
      if (rfft_) {
        rfft_->forward(frame.data(), re.data(), im.data());
        for (int b = 0; b < bins; ++b) power[b] = re[b] * re[b] + im[b] * im[b];
      } else {
        fallback_power(frame, power);
      }
      for (int m = 0; m < cfg_.n_mels; ++m) {
        const auto& flt = filters_[m];
        float acc = 0.0f;
        const float* p = power.data() + flt.first_bin;
        for (size_t j = 0; j < flt.weights.size(); ++j) acc += flt.weights[j] * p[j];
        out(m, f) = std::log(acc + static_cast<float>(cfg_.log_floor));
      }
    }
    return out;
  }

  MelSpectrogram extract_clip(const AudioClip& clip) const {
    SINGERID_CHECK(clip.sample_rate_hz == sample_rate_, DataError,
                   "log_mel: clip sample rate does not match extractor");
    MelSpectrogram mel;
    mel.values = extract(clip.samples.data(), clip.size());
    mel.window_samples = cfg_.window;
    mel.frame_hop_samples = cfg_.hop;
    mel.sample_rate_hz = sample_rate_;
    return mel;
  }

 private:
  struct SparseFilter {
    int first_bin = 0;
    std::vector<float> weights;
  };

  void fallback_power(const std::vector<float>& frame, std::vector<float>& power) const {
    // Odd window sizes: full complex DFT in double. Test configurations only.
    std::vector<double> re(frame.begin(), frame.end()), im(frame.size(), 0.0);
    detail::FftPlan<double> plan(static_cast<int>(frame.size()));
    plan.forward(re.data(), im.data());
    for (size_t b = 0; b < power.size(); ++b) {
      power[b] = static_cast<float>(re[b] * re[b] + im[b] * im[b]);
    }
  }

  FeatureConfig cfg_;
  int sample_rate_;
  std::vector<SparseFilter> filters_;
  std::vector<float> window_;
  std::unique_ptr<detail::RealFft<float>> rfft_;
};

// One-shot log-mel; builds an extractor per call. Training code should hold
// a MelExtractor instead.
inline MelSpectrogram log_mel(const AudioClip& clip, const FeatureConfig& cfg = {}) {
  return MelExtractor(cfg, clip.sample_rate_hz).extract_clip(clip);
}

}  // namespace singerid

#endif  // SINGERID_DSP_HPP_
