// singerid/losses.hpp

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

// Self-supervised objectives on batch projections, with analytic gradients.
//
// Every loss returns the scalar value together with gradients with respect
// to its inputs. Gradients treat the input matrices as free variables (the
// cosine similarity carries its full normalization Jacobian), so central
// finite differences on the entries reproduce them directly.

#ifndef SINGERID_LOSSES_HPP_
#define SINGERID_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "singerid/errors.hpp"
#include "singerid/matrix.hpp"

namespace singerid {

enum class LossVariant { kCont, kContVc, kUnif, kVicreg, kByol };

inline const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::kCont: return "CONT";
    case LossVariant::kContVc: return "CONT-VC";
    case LossVariant::kUnif: return "UNIF";
    case LossVariant::kVicreg: return "VICReg";
    case LossVariant::kByol: return "BYOL";
  }
  return "?";
}

inline LossVariant parse_loss_variant(const std::string& name) {
  if (name == "CONT" || name == "cont") return LossVariant::kCont;
  if (name == "CONT-VC" || name == "cont-vc" || name == "CONT_VC") return LossVariant::kContVc;
  if (name == "UNIF" || name == "unif") return LossVariant::kUnif;
  if (name == "VICReg" || name == "vicreg" || name == "VICREG") return LossVariant::kVicreg;
  if (name == "BYOL" || name == "byol") return LossVariant::kByol;
  throw ConfigError("unknown loss variant '" + name +
                    "' (expected one of CONT, CONT-VC, UNIF, VICReg, BYOL)");
}

struct LossConfig {
  LossVariant variant = LossVariant::kCont;
  double temperature = 0.2;      // tau in the contrastive loss
  double uniformity_t = 2.0;
  double uniformity_weight = 1.0;   // gamma
  double invariance_weight = 25.0;  // lambda (VICReg alignment weight)
  double variance_weight = 25.0;    // mu
  double covariance_weight = 100.0; // nu
  double variance_target = 1.0;     // target per-dimension std
  double variance_eps = 1e-4;
  double ema_decay = 0.99;          // BYOL target update
  long ema_anneal_steps = 0;        // 0 = constant decay, else cosine toward 1
  bool symmetrize_contrastive = false;
  bool byol_symmetrize = true;
  bool byol_normalize_predictions = true;
  bool byol_predictor_on_target = false;  // literal Eq-style wiring, off by default

  void validate() const {
    SINGERID_CHECK(temperature > 0.0, ConfigError, "LossConfig: temperature must be positive");
    SINGERID_CHECK(variance_eps > 0.0, ConfigError, "LossConfig: variance_eps must be positive");
    SINGERID_CHECK(uniformity_weight >= 0.0 && invariance_weight >= 0.0 &&
                       variance_weight >= 0.0 && covariance_weight >= 0.0,
                   ConfigError, "LossConfig: weights must be nonnegative");
    SINGERID_CHECK(ema_decay >= 0.0 && ema_decay <= 1.0, ConfigError,
                   "LossConfig: ema_decay must be in [0, 1]");
  }
};

template <typename S>
struct LossOutput {
  S value = S(0);
  MatX<S> grad1;      // d value / d Z1
  MatX<S> grad2;      // d value / d Z2 (identically zero for BYOL targets)
  MatX<S> grad_pred;  // d value / d predictions (BYOL only)
  std::map<std::string, double> diagnostics;  // raw per-term values
};

namespace loss_detail {

template <typename S>
void check_same_shape(const MatX<S>& a, const MatX<S>& b, const char* who) {
  SINGERID_CHECK(a.rows() == b.rows() && a.cols() == b.cols(), DataError,
                 std::string(who) + ": batch shape mismatch");
}

// Loss inputs are produced by an l2-normalizing head; tolerate only small
// drift (finite-difference probes included).
template <typename S>
void check_rows_normalized(const MatX<S>& z, const char* who) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = static_cast<double>(z.row(i).norm());
    SINGERID_CHECK(std::abs(n - 1.0) < 1e-3, DataError,
                   std::string(who) + ": projection rows must be l2-normalized");
  }
}

}  // namespace loss_detail

template <typename S>
S cosine_similarity(const VecX<S>& a, const VecX<S>& b) {
  SINGERID_CHECK(a.size() == b.size(), DataError, "cosine_similarity: dimension mismatch");
  const S na = a.norm();
  const S nb = b.norm();
  SINGERID_CHECK(na > S(1e-12) && nb > S(1e-12), DataError,
                 "cosine_similarity: zero-norm vector");
  return a.dot(b) / (na * nb);
}

// Decoupled NT-Xent (positive term removed from the denominator). Anchors
// are view-1 rows, negatives view-2 rows:
//   sum_i [ -sim(z1_i, z2_i)/tau + log sum_{j != i} exp(sim(z1_i, z2_j)/tau) ]
// With symmetrize set, the two view orderings are averaged.
template <typename S>
LossOutput<S> nt_xent_decoupled(const MatX<S>& z1, const MatX<S>& z2, S tau,
                                bool symmetrize = false) {
  loss_detail::check_same_shape(z1, z2, "nt_xent_decoupled");
  const Eigen::Index b = z1.rows();
  SINGERID_CHECK(b >= 2, DataError, "nt_xent_decoupled: batch size must be >= 2");
  SINGERID_CHECK(tau > S(0), ConfigError, "nt_xent_decoupled: tau must be positive");
  loss_detail::check_rows_normalized(z1, "nt_xent_decoupled");
  loss_detail::check_rows_normalized(z2, "nt_xent_decoupled");

  auto one_direction = [&](const MatX<S>& za, const MatX<S>& zb, MatX<S>& ga, MatX<S>& gb) -> S {
    const VecX<S> na = za.rowwise().norm();
    const VecX<S> nb = zb.rowwise().norm();
    MatX<S> sim = za * zb.transpose();
    for (Eigen::Index i = 0; i < b; ++i)
      for (Eigen::Index j = 0; j < b; ++j) sim(i, j) /= na(i) * nb(j);

    // dL/dsim
    MatX<S> dsim(b, b);
    S value = S(0);
    for (Eigen::Index i = 0; i < b; ++i) {
      S mx = -std::numeric_limits<S>::infinity();
      for (Eigen::Index j = 0; j < b; ++j)
        if (j != i) mx = std::max(mx, sim(i, j) / tau);
      S denom = S(0);
      for (Eigen::Index j = 0; j < b; ++j)
        if (j != i) denom += std::exp(sim(i, j) / tau - mx);
      value += -sim(i, i) / tau + mx + std::log(denom);
      for (Eigen::Index j = 0; j < b; ++j) {
        dsim(i, j) = (j == i) ? S(-1) / tau
                              : std::exp(sim(i, j) / tau - mx) / denom / tau;
      }
    }

    // Cosine Jacobian: dsim_ij/dza_i = zb_j/(na nb) - sim_ij za_i/na^2.
    MatX<S> scaled = dsim;
    for (Eigen::Index i = 0; i < b; ++i)
      for (Eigen::Index j = 0; j < b; ++j) scaled(i, j) /= na(i) * nb(j);
    const VecX<S> row_ds = (dsim.array() * sim.array()).rowwise().sum().matrix();
    const VecX<S> col_ds = (dsim.array() * sim.array()).colwise().sum().matrix().transpose();
    ga = scaled * zb;
    gb = scaled.transpose() * za;
    for (Eigen::Index i = 0; i < b; ++i) ga.row(i) -= row_ds(i) / (na(i) * na(i)) * za.row(i);
    for (Eigen::Index j = 0; j < b; ++j) gb.row(j) -= col_ds(j) / (nb(j) * nb(j)) * zb.row(j);
    return value;
  };

  LossOutput<S> out;
  MatX<S> ga, gb;
  out.value = one_direction(z1, z2, ga, gb);
  out.grad1 = ga;
  out.grad2 = gb;
  if (symmetrize) {
    MatX<S> ga2, gb2;
    const S v2 = one_direction(z2, z1, ga2, gb2);
    out.value = (out.value + v2) / S(2);
    out.grad1 = (out.grad1 + gb2) / S(2);
    out.grad2 = (out.grad2 + ga2) / S(2);
  }
  out.diagnostics["cont"] = static_cast<double>(out.value);
  return out;
}

// Mean squared distance between paired projections: (1/B) sum_i ||z1_i - z2_i||^2.
template <typename S>
LossOutput<S> alignment_loss(const MatX<S>& z1, const MatX<S>& z2) {
  loss_detail::check_same_shape(z1, z2, "alignment_loss");
  const S b = static_cast<S>(z1.rows());
  LossOutput<S> out;
  const MatX<S> diff = z1 - z2;
  out.value = diff.squaredNorm() / b;
  out.grad1 = S(2) / b * diff;
  out.grad2 = -out.grad1;
  out.diagnostics["align"] = static_cast<double>(out.value);
  return out;
}

// Per view k: log of the mean over ordered pairs i != j of exp(-t ||z_i - z_j||^2),
// averaged over the two views. Maximal (zero) when a view collapses.
template <typename S>
LossOutput<S> uniformity_loss(const MatX<S>& z1, const MatX<S>& z2, S t) {
  loss_detail::check_same_shape(z1, z2, "uniformity_loss");
  const Eigen::Index b = z1.rows();
  SINGERID_CHECK(b >= 2, DataError, "uniformity_loss: batch size must be >= 2");
  loss_detail::check_rows_normalized(z1, "uniformity_loss");
  loss_detail::check_rows_normalized(z2, "uniformity_loss");

  auto one_view = [&](const MatX<S>& z, MatX<S>& grad) -> S {
    const MatX<S> gram = z * z.transpose();
    MatX<S> e(b, b);
    S total = S(0);
    for (Eigen::Index i = 0; i < b; ++i) {
      e(i, i) = S(0);
      for (Eigen::Index j = 0; j < b; ++j) {
        if (j == i) continue;
        const S d2 = gram(i, i) + gram(j, j) - S(2) * gram(i, j);
        e(i, j) = std::exp(-t * d2);
        total += e(i, j);
      }
    }
    const S mean = total / static_cast<S>(b * (b - 1));
    // dU/dz_a = (-4t / total) * sum_{j != a} e_aj (z_a - z_j)
    const VecX<S> rho = e.rowwise().sum();
    grad = (S(-4) * t / total) * (rho.asDiagonal() * z - e * z);
    return std::log(mean);
  };

  LossOutput<S> out;
  MatX<S> g1, g2;
  const S u1 = one_view(z1, g1);
  const S u2 = one_view(z2, g2);
  out.value = (u1 + u2) / S(2);
  out.grad1 = g1 / S(2);
  out.grad2 = g2 / S(2);
  out.diagnostics["unif"] = static_cast<double>(out.value);
  out.diagnostics["unif_view1"] = static_cast<double>(u1);
  out.diagnostics["unif_view2"] = static_cast<double>(u2);
  return out;
}

// Hinge on the per-dimension regularized std:
//   (1/D) sum_j max(0, target - sqrt(Var(col_j) + eps)),
// with the unbiased 1/(B-1) variance estimator.
template <typename S>
LossOutput<S> variance_loss(const MatX<S>& z, S target, S eps) {
  const Eigen::Index b = z.rows();
  const Eigen::Index d = z.cols();
  SINGERID_CHECK(b >= 2, DataError, "variance_loss: batch size must be >= 2");
  SINGERID_CHECK(eps > S(0), ConfigError, "variance_loss: eps must be positive");

  LossOutput<S> out;
  out.grad1 = MatX<S>::Zero(b, d);
  const VecX<S> mean = z.colwise().mean().transpose();
  S value = S(0);
  for (Eigen::Index j = 0; j < d; ++j) {
    S var = S(0);
    for (Eigen::Index i = 0; i < b; ++i) {
      const S c = z(i, j) - mean(j);
      var += c * c;
    }
    var /= static_cast<S>(b - 1);
    const S sd = std::sqrt(var + eps);
    if (sd < target) {
      value += target - sd;
      const S scale = S(-1) / (static_cast<S>(d) * static_cast<S>(b - 1) * sd);
      for (Eigen::Index i = 0; i < b; ++i) out.grad1(i, j) = scale * (z(i, j) - mean(j));
    }
  }
  out.value = value / static_cast<S>(d);
  out.diagnostics["var"] = static_cast<double>(out.value);
  return out;
}

// Sum of squared off-diagonal covariance entries, scaled by 1/D, with the
// 1/(B-1) covariance estimator.
template <typename S>
LossOutput<S> covariance_loss(const MatX<S>& z) {
  const Eigen::Index b = z.rows();
  const Eigen::Index d = z.cols();
  SINGERID_CHECK(b >= 2, DataError, "covariance_loss: batch size must be >= 2");

  const MatX<S> centered = z.rowwise() - z.colwise().mean();
  MatX<S> cov = centered.transpose() * centered / static_cast<S>(b - 1);
  S value = S(0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j) value += cov(i, j) * cov(i, j);
  value /= static_cast<S>(d);

  cov.diagonal().setZero();
  MatX<S> grad = S(2) / static_cast<S>(d) * S(2) / static_cast<S>(b - 1) * (centered * cov);
  grad.rowwise() -= grad.colwise().mean();  // centering Jacobian

  LossOutput<S> out;
  out.value = value;
  out.grad1 = std::move(grad);
  out.diagnostics["cov"] = static_cast<double>(out.value);
  return out;
}

// BYOL regression: (1/B) sum_i ||zt_i - p_i||^2. The target batch carries no
// gradient by contract; grad2 is identically zero.
template <typename S>
LossOutput<S> byol_loss(const MatX<S>& predictions, const MatX<S>& target) {
  loss_detail::check_same_shape(predictions, target, "byol_loss");
  const S b = static_cast<S>(predictions.rows());
  LossOutput<S> out;
  const MatX<S> diff = predictions - target;
  out.value = diff.squaredNorm() / b;
  out.grad_pred = S(2) / b * diff;
  out.grad2 = MatX<S>::Zero(target.rows(), target.cols());
  out.diagnostics["byol"] = static_cast<double>(out.value);
  return out;
}

// target <- decay * target + (1 - decay) * online, elementwise.
template <typename S>
void ema_update(MatX<S>& target, const MatX<S>& online, S decay) {
  loss_detail::check_same_shape(target, online, "ema_update");
  SINGERID_CHECK(decay >= S(0) && decay <= S(1), ConfigError, "ema_update: decay must be in [0,1]");
  target = decay * target + (S(1) - decay) * online;
}

// Weighted composition per experiment variant. Variance and covariance
// regularizers are computed on each view and averaged. For BYOL,
// `predictions` is required and z2 is the (stop-gradient) target batch.
template <typename S>
LossOutput<S> compose_loss(const LossConfig& cfg, const MatX<S>& z1, const MatX<S>& z2,
                           const MatX<S>* predictions = nullptr) {
  cfg.validate();

  auto add_vc = [&](LossOutput<S>& out) {
    LossOutput<S> v1 = variance_loss(z1, static_cast<S>(cfg.variance_target),
                                     static_cast<S>(cfg.variance_eps));
    LossOutput<S> v2 = variance_loss(z2, static_cast<S>(cfg.variance_target),
                                     static_cast<S>(cfg.variance_eps));
    LossOutput<S> c1 = covariance_loss(z1);
    LossOutput<S> c2 = covariance_loss(z2);
    const S var_avg = (v1.value + v2.value) / S(2);
    const S cov_avg = (c1.value + c2.value) / S(2);
    const S wv = static_cast<S>(cfg.variance_weight);
    const S wc = static_cast<S>(cfg.covariance_weight);
    out.value += wv * var_avg + wc * cov_avg;
    out.grad1 += wv / S(2) * v1.grad1 + wc / S(2) * c1.grad1;
    out.grad2 += wv / S(2) * v2.grad1 + wc / S(2) * c2.grad1;
    out.diagnostics["var"] = static_cast<double>(var_avg);
    out.diagnostics["cov"] = static_cast<double>(cov_avg);
  };

  switch (cfg.variant) {
    case LossVariant::kCont: {
      return nt_xent_decoupled(z1, z2, static_cast<S>(cfg.temperature),
                               cfg.symmetrize_contrastive);
    }
    case LossVariant::kContVc: {
      LossOutput<S> out = nt_xent_decoupled(z1, z2, static_cast<S>(cfg.temperature),
                                            cfg.symmetrize_contrastive);
      add_vc(out);
      return out;
    }
    case LossVariant::kUnif: {
      LossOutput<S> out = alignment_loss(z1, z2);
      LossOutput<S> u = uniformity_loss(z1, z2, static_cast<S>(cfg.uniformity_t));
      const S g = static_cast<S>(cfg.uniformity_weight);
      out.value += g * u.value;
      out.grad1 += g * u.grad1;
      out.grad2 += g * u.grad2;
      out.diagnostics["unif"] = u.diagnostics["unif"];
      return out;
    }
    case LossVariant::kVicreg: {
      LossOutput<S> a = alignment_loss(z1, z2);
      LossOutput<S> out;
      const S lam = static_cast<S>(cfg.invariance_weight);
      out.value = lam * a.value;
      out.grad1 = lam * a.grad1;
      out.grad2 = lam * a.grad2;
      out.diagnostics["align"] = a.diagnostics["align"];
      add_vc(out);
      return out;
    }
    case LossVariant::kByol: {
      SINGERID_CHECK(predictions != nullptr, ConfigError,
                     "compose_loss: BYOL requires a predictions batch");
      LossOutput<S> out = byol_loss(*predictions, z2);
      out.grad1 = MatX<S>::Zero(z1.rows(), z1.cols());
      return out;
    }
  }
  throw ConfigError("compose_loss: unknown variant");
}

// Central finite-difference check of compose_loss gradients over all
// gradient-carrying inputs. Returns the max relative error.
template <typename S>
S loss_gradient_check(const LossConfig& cfg, MatX<S> z1, MatX<S> z2,
                      MatX<S>* predictions = nullptr, S step = S(1e-5)) {
  const LossOutput<S> analytic = compose_loss<S>(cfg, z1, z2, predictions);

  auto value_at = [&]() -> S { return compose_loss<S>(cfg, z1, z2, predictions).value; };

  S max_rel = S(0);
  auto check_matrix = [&](MatX<S>& m, const MatX<S>& grad) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const S saved = m(i, j);
        m(i, j) = saved + step;
        const S up = value_at();
        m(i, j) = saved - step;
        const S dn = value_at();
        m(i, j) = saved;
        const S fd = (up - dn) / (S(2) * step);
        const S a = grad(i, j);
        const S rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), S(1e-6)});
        max_rel = std::max(max_rel, rel);
      }
    }
  };

  if (cfg.variant == LossVariant::kByol) {
    // The target batch is stop-gradient by contract; only predictions carry
    // a true derivative.
    check_matrix(*predictions, analytic.grad_pred);
  } else {
    check_matrix(z1, analytic.grad1);
    check_matrix(z2, analytic.grad2);
  }
  return max_rel;
}

// BYOL EMA decay schedule: constant, or cosine-annealed toward 1.
inline double ema_decay_at(const LossConfig& cfg, long step) {
  if (cfg.ema_anneal_steps <= 0) return cfg.ema_decay;
  const double progress =
      std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.ema_anneal_steps));
  return 1.0 - (1.0 - cfg.ema_decay) * (std::cos(M_PI * progress) + 1.0) / 2.0;
}

}  // namespace singerid

#endif  // SINGERID_LOSSES_HPP_
