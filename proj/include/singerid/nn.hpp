// singerid/nn.hpp

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

// Desk-scale encoder stack with hand-written backpropagation: strided 1-D
// convolutions over mel frames, SiLU activations, temporal mean pooling, and
// an l2-normalized SiLU+linear projection head. Templated on the scalar so
// tests can instantiate in double for finite-difference checks while
// training runs in float32.

#ifndef SINGERID_NN_HPP_
#define SINGERID_NN_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "singerid/errors.hpp"
#include "singerid/matrix.hpp"
#include "singerid/rng.hpp"

namespace singerid {

struct ConvBlockSpec {
  int out_channels = 0;
  int kernel = 5;
  int stride = 2;
};

// Encoder architecture. The embedding width H is the channel count of the
// last block.
struct EncoderSpec {
  int input_bins = 80;
  std::vector<ConvBlockSpec> blocks = {{48, 5, 2}, {64, 5, 2}, {96, 5, 2}, {128, 5, 2}};
  bool standardize_input = true;

  int embed_dim() const { return blocks.empty() ? input_bins : blocks.back().out_channels; }

  void validate() const {
    SINGERID_CHECK(input_bins > 0, ConfigError, "EncoderSpec: input_bins must be positive");
    SINGERID_CHECK(!blocks.empty(), ConfigError, "EncoderSpec: at least one block required");
    for (const auto& blk : blocks) {
      SINGERID_CHECK(blk.out_channels > 0 && blk.kernel > 0 && blk.stride > 0, ConfigError,
                     "EncoderSpec: block sizes must be positive");
    }
  }

  // Minimum number of input frames for a nonempty output.
  int min_frames() const {
    int n = 1;
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      n = (n - 1) * it->stride + it->kernel;
    }
    return n;
  }
};

template <typename S>
S silu(S x) {
  return x / (S(1) + std::exp(-x));
}

template <typename S>
S silu_grad(S x) {
  const S sig = S(1) / (S(1) + std::exp(-x));
  return sig * (S(1) + x * (S(1) - sig));
}

// Strided 1-D convolution, implemented as im2col + GEMM.
// Input is channels x frames; no padding, frames that would overrun are
// dropped (out_len = (L - kernel)/stride + 1).
template <typename S>
struct Conv1d {
  MatX<S> weight;  // out_ch x (in_ch * kernel); w(o, j*in_ch + c)
  MatX<S> bias;    // out_ch x 1
  int in_ch = 0;
  int kernel = 0;
  int stride = 1;

  void init(int in_channels, const ConvBlockSpec& spec, Rng& rng) {
    in_ch = in_channels;
    kernel = spec.kernel;
    stride = spec.stride;
    const int fan_in = in_ch * kernel;
    const double std_dev = std::sqrt(2.0 / fan_in);
    weight.resize(spec.out_channels, fan_in);
    for (Eigen::Index i = 0; i < weight.size(); ++i) {
      weight.data()[i] = static_cast<S>(rng.normal(0.0, std_dev));
    }
    bias = MatX<S>::Zero(spec.out_channels, 1);
  }

  int out_channels() const { return static_cast<int>(weight.rows()); }

  int out_len(int in_len) const {
    SINGERID_CHECK(in_len >= kernel, DataError,
                   "Conv1d: input shorter than kernel (" + std::to_string(in_len) + " < " +
                       std::to_string(kernel) + " frames)");
    return (in_len - kernel) / stride + 1;
  }

  // cols (in_ch*kernel x out_len) is the im2col cache needed by backward.
  MatX<S> forward(const MatX<S>& x, MatX<S>& cols) const {
    SINGERID_CHECK(x.rows() == in_ch, DataError, "Conv1d: channel mismatch");
    const int lo = out_len(static_cast<int>(x.cols()));
    cols.resize(in_ch * kernel, lo);
    for (int t = 0; t < lo; ++t) {
      for (int j = 0; j < kernel; ++j) {
        cols.block(j * in_ch, t, in_ch, 1) = x.col(t * stride + j);
      }
    }
    MatX<S> y = weight * cols;
    y.colwise() += bias.col(0);
    return y;
  }

  // dy is out_ch x out_len; returns dx and accumulates parameter grads.
  MatX<S> backward(const MatX<S>& cols, const MatX<S>& dy, int in_len, MatX<S>& grad_weight,
                   MatX<S>& grad_bias) const {
    grad_weight.noalias() += dy * cols.transpose();
    grad_bias.col(0).noalias() += dy.rowwise().sum();
    const MatX<S> dcols = weight.transpose() * dy;
    MatX<S> dx = MatX<S>::Zero(in_ch, in_len);
    const int lo = static_cast<int>(dy.cols());
    for (int t = 0; t < lo; ++t) {
      for (int j = 0; j < kernel; ++j) {
        dx.col(t * stride + j) += dcols.block(j * in_ch, t, in_ch, 1);
      }
    }
    return dx;
  }
};

// Fully connected layer (used by the projection head and BYOL predictor).
template <typename S>
struct Dense {
  MatX<S> weight;  // out x in
  MatX<S> bias;    // out x 1

  void init(int in_dim, int out_dim, Rng& rng) {
    const double std_dev = std::sqrt(1.0 / in_dim);
    weight.resize(out_dim, in_dim);
    for (Eigen::Index i = 0; i < weight.size(); ++i) {
      weight.data()[i] = static_cast<S>(rng.normal(0.0, std_dev));
    }
    bias = MatX<S>::Zero(out_dim, 1);
  }

  VecX<S> forward(const VecX<S>& x) const { return weight * x + bias.col(0); }
};

// Arithmetic mean over the time axis.
template <typename S>
VecX<S> temporal_pool(const MatX<S>& seq) {
  SINGERID_CHECK(seq.cols() >= 1, DataError, "temporal_pool: empty sequence");
  return seq.rowwise().mean();
}

// Full model: encoder stack -> temporal mean pool -> SiLU+FC projection with
// l2 normalization. h is the retained feature embedding, z the loss-space
// projection.
template <typename S>
class SingerModel {
 public:
  SingerModel() = default;

  SingerModel(const EncoderSpec& spec, int projection_dim, Rng& rng) { init(spec, projection_dim, rng); }

  void init(const EncoderSpec& spec, int projection_dim, Rng& rng) {
    spec.validate();
    SINGERID_CHECK(projection_dim > 0, ConfigError, "SingerModel: projection dim must be positive");
    spec_ = spec;
    proj_dim_ = projection_dim;
    conv_.resize(spec.blocks.size());
    int ch = spec.input_bins;
    for (size_t i = 0; i < spec.blocks.size(); ++i) {
      conv_[i].init(ch, spec.blocks[i], rng);
      ch = spec.blocks[i].out_channels;
    }
    proj_.init(ch, projection_dim, rng);
  }

  const EncoderSpec& spec() const { return spec_; }
  int embed_dim() const { return spec_.embed_dim(); }
  int projection_dim() const { return proj_dim_; }
  std::vector<Conv1d<S>>& conv() { return conv_; }
  Dense<S>& projection() { return proj_; }
  const Dense<S>& projection() const { return proj_; }

  struct Cache {
    MatX<S> input;                // standardized mel (input to block 0)
    std::vector<MatX<S>> cols;    // per-block im2col matrices
    std::vector<MatX<S>> preact;  // per-block pre-activation outputs
    std::vector<int> in_len;      // per-block input lengths
    VecX<S> h;                    // pooled features
    VecX<S> silu_h;
    VecX<S> pre_norm;             // projection output before normalization
    S pre_norm_len = S(0);
    VecX<S> z;
    int out_frames = 0;
  };

  // Encoder g(.): mel (F x L) -> latent sequence (H x L').
  MatX<S> encode(const MatX<S>& mel, Cache* cache = nullptr) const {
    SINGERID_CHECK(static_cast<int>(mel.rows()) == spec_.input_bins, DataError,
                   "encode: mel bin count does not match encoder spec");
    MatX<S> x = spec_.standardize_input ? standardize(mel) : mel;
    if (cache) {
      cache->input = x;
      cache->cols.resize(conv_.size());
      cache->preact.resize(conv_.size());
      cache->in_len.resize(conv_.size());
    }
    MatX<S> scratch;
    for (size_t i = 0; i < conv_.size(); ++i) {
      MatX<S>& cols = cache ? cache->cols[i] : scratch;
      if (cache) cache->in_len[i] = static_cast<int>(x.cols());
      MatX<S> y = conv_[i].forward(x, cols);
      if (cache) cache->preact[i] = y;
      x = y.unaryExpr([](S v) { return silu(v); });
    }
    if (cache) cache->out_frames = static_cast<int>(x.cols());
    return x;
  }

  // Projection p(.): pooled features -> unit-norm z.
  VecX<S> project(const VecX<S>& h, Cache* cache = nullptr) const {
    VecX<S> sh = h.unaryExpr([](S v) { return silu(v); });
    VecX<S> v = proj_.forward(sh);
    const S n = v.norm();
    SINGERID_CHECK(n > S(1e-12), NumericError, "project: pre-normalization vector has zero norm");
    VecX<S> z = v / n;
    if (cache) {
      cache->h = h;
      cache->silu_h = sh;
      cache->pre_norm = v;
      cache->pre_norm_len = n;
      cache->z = z;
    }
    return z;
  }

  // Full forward pass; returns (h, z) and fills the cache for backward.
  void forward(const MatX<S>& mel, VecX<S>& h, VecX<S>& z, Cache* cache = nullptr) const {
    const MatX<S> seq = encode(mel, cache);
    h = temporal_pool(seq);
    z = project(h, cache);
  }

  // Gradient container matching visit_params order.
  struct Grads {
    std::vector<MatX<S>> tensors;

    void add(const Grads& other) {
      for (size_t i = 0; i < tensors.size(); ++i) tensors[i] += other.tensors[i];
    }
    void setZero() {
      for (auto& t : tensors) t.setZero();
    }
  };

  Grads zero_grads() const {
    Grads g;
    const_cast<SingerModel*>(this)->visit_params([&](const std::string&, MatX<S>& m) {
      g.tensors.push_back(MatX<S>::Zero(m.rows(), m.cols()));
    });
    return g;
  }

  // Backward from dz (and optionally dh) through projection, pooling, and the
  // conv stack. Parameter gradients are accumulated into `grads`.
  void backward(const Cache& cache, const VecX<S>& dz, const VecX<S>* dh_extra,
                Grads& grads) const {
    // z = v / |v|  =>  dv = (dz - z (z . dz)) / |v|
    const S zdotdz = cache.z.dot(dz);
    VecX<S> dv = (dz - zdotdz * cache.z) / cache.pre_norm_len;

    // v = W silu(h) + b
    size_t gi = grads.tensors.size();
    grads.tensors[gi - 2].noalias() += dv * cache.silu_h.transpose();
    grads.tensors[gi - 1].col(0) += dv;
    VecX<S> dsh = proj_.weight.transpose() * dv;
    VecX<S> dh = dsh.array() * cache.h.unaryExpr([](S v) { return silu_grad(v); }).array();
    if (dh_extra) dh += *dh_extra;

    // pooling: broadcast dh / L'
    MatX<S> dseq = (dh / static_cast<S>(cache.out_frames)).replicate(1, cache.out_frames);

    for (int i = static_cast<int>(conv_.size()) - 1; i >= 0; --i) {
      // through SiLU
      dseq.array() *= cache.preact[i].unaryExpr([](S v) { return silu_grad(v); }).array();
      dseq = conv_[i].backward(cache.cols[i], dseq, cache.in_len[i], grads.tensors[2 * i],
                               grads.tensors[2 * i + 1]);
    }
  }

  // Visits parameters in a fixed order with stable names.
  template <typename F>
  void visit_params(F&& f) {
    for (size_t i = 0; i < conv_.size(); ++i) {
      f("encoder.block" + std::to_string(i) + ".weight", conv_[i].weight);
      f("encoder.block" + std::to_string(i) + ".bias", conv_[i].bias);
    }
    f("projection.weight", proj_.weight);
    f("projection.bias", proj_.bias);
  }

  std::vector<MatX<S>*> param_ptrs() {
    std::vector<MatX<S>*> out;
    visit_params([&](const std::string&, MatX<S>& m) { out.push_back(&m); });
    return out;
  }

 private:
  static MatX<S> standardize(const MatX<S>& m) {
    const S mean = m.mean();
    const S var = (m.array() - mean).square().mean();
    const S sd = std::sqrt(var);
    return (m.array() - mean) / (sd + S(1e-5));
  }

  EncoderSpec spec_;
  int proj_dim_ = 0;
  std::vector<Conv1d<S>> conv_;
  Dense<S> proj_;
};

// BYOL predictor: same SiLU+FC shape as the projection head, D -> D, with
// optional l2 normalization of the output.
template <typename S>
class Predictor {
 public:
  Predictor() = default;

  void init(int dim, bool normalize, Rng& rng) {
    fc_.init(dim, dim, rng);
    normalize_ = normalize;
  }

  bool initialized() const { return fc_.weight.size() > 0; }
  bool normalizes() const { return normalize_; }
  Dense<S>& fc() { return fc_; }

  struct Cache {
    VecX<S> in, silu_in, pre_norm, out;
    S pre_norm_len = S(0);
  };

  VecX<S> forward(const VecX<S>& z, Cache* cache = nullptr) const {
    VecX<S> sz = z.unaryExpr([](S v) { return silu(v); });
    VecX<S> v = fc_.forward(sz);
    VecX<S> out = v;
    S n = S(1);
    if (normalize_) {
      n = v.norm();
      SINGERID_CHECK(n > S(1e-12), NumericError, "predictor: zero-norm output");
      out = v / n;
    }
    if (cache) {
      cache->in = z;
      cache->silu_in = sz;
      cache->pre_norm = v;
      cache->pre_norm_len = n;
      cache->out = out;
    }
    return out;
  }

  // Returns d loss / d input; accumulates parameter grads.
  VecX<S> backward(const Cache& cache, const VecX<S>& dout, MatX<S>& grad_weight,
                   MatX<S>& grad_bias) const {
    VecX<S> dv = dout;
    if (normalize_) {
      const S dot = cache.out.dot(dout);
      dv = (dout - dot * cache.out) / cache.pre_norm_len;
    }
    grad_weight.noalias() += dv * cache.silu_in.transpose();
    grad_bias.col(0) += dv;
    VecX<S> dsz = fc_.weight.transpose() * dv;
    return dsz.array() * cache.in.unaryExpr([](S v) { return silu_grad(v); }).array();
  }

  template <typename F>
  void visit_params(F&& f) {
    f("predictor.weight", fc_.weight);
    f("predictor.bias", fc_.bias);
  }

 private:
  Dense<S> fc_;
  bool normalize_ = true;
};

}  // namespace singerid

#endif  // SINGERID_NN_HPP_
