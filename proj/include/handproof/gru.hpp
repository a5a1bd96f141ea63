// SPDX-License-Identifier: Apache-2.0
//
// Single-layer GRU binary classifier: GRU(hidden) -> inverted dropout on the
// last hidden state -> one sigmoid output unit. Forward pass, exact
// backpropagation through time and Adam, written against Eigen and templated
// on the scalar type.
//
//   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
//   r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
//   c_t = tanh(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
//   h_t = (1 - z_t) * h_{t-1} + z_t * c_t
//
// Sequences of a batch are laid out step-major: an input matrix has
// `input_dim` rows and steps * batch columns, column t * batch + b holding
// step t of sequence b.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "handproof/error.hpp"
#include "handproof/random.hpp"

namespace handproof {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Trainable parameters. Gate blocks are stacked in the order z, r, h:
/// rows [0, H) of W, U and b belong to the update gate, [H, 2H) to the reset
/// gate and [2H, 3H) to the candidate.
template <typename Scalar>
struct GruParams {
  MatrixX<Scalar> W;      // 3H x I
  MatrixX<Scalar> U;      // 3H x H
  VectorX<Scalar> b;      // 3H
  VectorX<Scalar> w_out;  // H
  Eigen::Matrix<Scalar, 1, 1> b_out;

  static GruParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim) {
    GruParams p;
    p.W = MatrixX<Scalar>::Zero(3 * hidden_dim, input_dim);
    p.U = MatrixX<Scalar>::Zero(3 * hidden_dim, hidden_dim);
    p.b = VectorX<Scalar>::Zero(3 * hidden_dim);
    p.w_out = VectorX<Scalar>::Zero(hidden_dim);
    p.b_out.setZero();
    return p;
  }

  Eigen::Index input_dim() const { return W.cols(); }
  Eigen::Index hidden_dim() const { return U.cols(); }
  Eigen::Index size() const {
    return W.size() + U.size() + b.size() + w_out.size() + 1;
  }

  bool all_finite() const {
    return W.allFinite() && U.allFinite() && b.allFinite() && w_out.allFinite() &&
           b_out.allFinite();
  }

  template <typename Scalar2>
  GruParams<Scalar2> cast() const {
    return {W.template cast<Scalar2>(), U.template cast<Scalar2>(),
            b.template cast<Scalar2>(), w_out.template cast<Scalar2>(),
            b_out.template cast<Scalar2>()};
  }
};

/// Applies f to matching members of any number of parameter sets.
template <typename F, typename First, typename... Rest>
void visit_params(F&& f, First& first, Rest&... rest) {
  f(first.W, rest.W...);
  f(first.U, rest.U...);
  f(first.b, rest.b...);
  f(first.w_out, rest.w_out...);
  f(first.b_out, rest.b_out...);
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// Glorot-uniform input and output weights, orthogonal recurrent blocks
/// (QR of a Gaussian draw), zero biases.
template <typename Scalar>
GruParams<Scalar> initialize_gru(Eigen::Index input_dim, Eigen::Index hidden_dim, Rng& rng) {
  auto p = GruParams<Scalar>::zeros(input_dim, hidden_dim);
  const double limit_in = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  for (Eigen::Index j = 0; j < p.W.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.W.rows(); ++i) {
      p.W(i, j) = static_cast<Scalar>(rng.uniform(-limit_in, limit_in));
    }
  }
  for (int gate = 0; gate < 3; ++gate) {
    Eigen::MatrixXd gauss(hidden_dim, hidden_dim);
    for (Eigen::Index j = 0; j < hidden_dim; ++j) {
      for (Eigen::Index i = 0; i < hidden_dim; ++i) gauss(i, j) = rng.normal();
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < hidden_dim; ++j) {
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    p.U.middleRows(gate * hidden_dim, hidden_dim) = q.cast<Scalar>();
  }
  const double limit_out = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
  for (Eigen::Index i = 0; i < hidden_dim; ++i) {
    p.w_out[i] = static_cast<Scalar>(rng.uniform(-limit_out, limit_out));
  }
  return p;
}

/// One recurrence step for a single sequence.
template <typename Scalar>
VectorX<Scalar> gru_step(const GruParams<Scalar>& p,
                         const std::type_identity_t<VectorX<Scalar>>& x,
                         const std::type_identity_t<VectorX<Scalar>>& h_prev) {
  const Eigen::Index H = p.hidden_dim();
  if (x.size() != p.input_dim() || h_prev.size() != H) {
    throw Error(ErrorCode::DimensionMismatch, "gru_step input or state has the wrong size");
  }
  const VectorX<Scalar> pre = p.W * x + p.b;
  const VectorX<Scalar> zr =
      (pre.head(2 * H) + p.U.topRows(2 * H) * h_prev).unaryExpr([](Scalar v) { return sigmoid(v); });
  const auto z = zr.head(H).array();
  const auto r = zr.tail(H).array();
  const VectorX<Scalar> rh = (r * h_prev.array()).matrix();
  const VectorX<Scalar> c = (pre.tail(H) + p.U.bottomRows(H) * rh).array().tanh().matrix();
  return ((Scalar(1) - z) * h_prev.array() + z * c.array()).matrix();
}

/// Activations kept by the forward pass for backpropagation.
template <typename Scalar>
struct GruCache {
  Eigen::Index steps = 0;
  Eigen::Index batch = 0;
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  MatrixX<Scalar> inputs;    // I x (T B)
  MatrixX<Scalar> gates;     // 3H x (T B): z, r, candidate
  MatrixX<Scalar> hidden;    // H x (T B): h_1 .. h_T
  std::vector<Eigen::Index> readout_step;  // 1-based step read per sequence
  MatrixX<Scalar> dropout_mask;            // H x B, scaled; empty if inactive
  MatrixX<Scalar> features;                // H x B, readout after dropout
  RowVectorX<Scalar> probability;          // 1 x B
};

/// Runs the batch through the network. `readout_step` selects, per sequence,
/// the 1-based step whose hidden state feeds the output (pass an empty span
/// to read the last step of every sequence). With `dropout_rate` > 0 an
/// inverted-dropout mask is drawn from `rng`; `fixed_mask` replays a mask.
template <typename Scalar>
GruCache<Scalar> gru_forward(const GruParams<Scalar>& p, const MatrixX<Scalar>& inputs,
                             Eigen::Index batch, std::span<const Eigen::Index> readout_step,
                             double dropout_rate, Rng* rng,
                             const MatrixX<Scalar>* fixed_mask = nullptr) {
  const Eigen::Index H = p.hidden_dim();
  const Eigen::Index I = p.input_dim();
  if (inputs.rows() != I || batch <= 0 || inputs.cols() % batch != 0) {
    throw Error(ErrorCode::DimensionMismatch, "input matrix does not match the network");
  }
  GruCache<Scalar> cache;
  cache.steps = inputs.cols() / batch;
  cache.batch = batch;
  cache.input_dim = I;
  cache.hidden_dim = H;
  const Eigen::Index T = cache.steps;
  if (T == 0) throw Error(ErrorCode::DimensionMismatch, "empty sequence batch");
  if (!readout_step.empty() && static_cast<Eigen::Index>(readout_step.size()) != batch) {
    throw Error(ErrorCode::DimensionMismatch, "one readout step per sequence expected");
  }
  cache.readout_step.assign(static_cast<std::size_t>(batch), T);
  for (std::size_t i = 0; i < readout_step.size(); ++i) {
    cache.readout_step[i] = std::clamp<Eigen::Index>(readout_step[i], 1, T);
  }

  cache.inputs = inputs;
  cache.gates.noalias() = p.W * inputs;
  cache.gates.colwise() += p.b;
  cache.hidden.resize(H, T * batch);

  MatrixX<Scalar> h_prev = MatrixX<Scalar>::Zero(H, batch);
  MatrixX<Scalar> rh(H, batch);
  for (Eigen::Index t = 0; t < T; ++t) {
    auto g = cache.gates.middleCols(t * batch, batch);
    g.topRows(2 * H).noalias() += p.U.topRows(2 * H) * h_prev;
    g.topRows(2 * H) = g.topRows(2 * H).unaryExpr([](Scalar v) { return sigmoid(v); });
    rh = (g.middleRows(H, H).array() * h_prev.array()).matrix();
    g.bottomRows(H).noalias() += p.U.bottomRows(H) * rh;
    g.bottomRows(H) = g.bottomRows(H).array().tanh().matrix();
    auto h = cache.hidden.middleCols(t * batch, batch);
    h = ((Scalar(1) - g.topRows(H).array()) * h_prev.array() +
         g.topRows(H).array() * g.bottomRows(H).array())
            .matrix();
    h_prev = h;
  }

  cache.features.resize(H, batch);
  for (Eigen::Index s = 0; s < batch; ++s) {
    const Eigen::Index t = cache.readout_step[static_cast<std::size_t>(s)] - 1;
    cache.features.col(s) = cache.hidden.col(t * batch + s);
  }
  if (fixed_mask != nullptr) {
    if (fixed_mask->rows() != H || fixed_mask->cols() != batch) {
      throw Error(ErrorCode::DimensionMismatch, "dropout mask has the wrong shape");
    }
    cache.dropout_mask = *fixed_mask;
  } else if (dropout_rate > 0.0) {
    if (rng == nullptr) throw Error(ErrorCode::InvalidArgument, "dropout needs a random stream");
    const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - dropout_rate));
    cache.dropout_mask.resize(H, batch);
    for (Eigen::Index s = 0; s < batch; ++s) {
      for (Eigen::Index i = 0; i < H; ++i) {
        cache.dropout_mask(i, s) = rng->bernoulli(1.0 - dropout_rate) ? keep_scale : Scalar(0);
      }
    }
  }
  if (cache.dropout_mask.size() > 0) {
    cache.features = (cache.features.array() * cache.dropout_mask.array()).matrix();
  }
  cache.probability = ((p.w_out.transpose() * cache.features).array() + p.b_out(0))
                          .unaryExpr([](Scalar v) { return sigmoid(v); })
                          .matrix();
  return cache;
}

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
template <typename Scalar>
Scalar bce_loss(Scalar p, int target) {
  const Scalar lo = static_cast<Scalar>(kProbabilityClamp);
  const Scalar q = std::clamp(p, lo, Scalar(1) - lo);
  return target == 1 ? -std::log(q) : -std::log(Scalar(1) - q);
}

template <typename Scalar>
Scalar mean_bce(const RowVectorX<Scalar>& p, std::span<const int> targets) {
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    sum += bce_loss(p[i], targets[static_cast<std::size_t>(i)]);
  }
  return sum / static_cast<Scalar>(p.size());
}

/// Gradients of the mean batch BCE with respect to every parameter,
/// backpropagated through all steps (and the cached dropout mask).
template <typename Scalar>
GruParams<Scalar> gru_backward(const GruParams<Scalar>& p, const GruCache<Scalar>& cache,
                               std::span<const int> targets) {
  const Eigen::Index H = p.hidden_dim();
  const Eigen::Index B = cache.batch;
  const Eigen::Index T = cache.steps;
  if (static_cast<Eigen::Index>(targets.size()) != B || cache.hidden_dim != H ||
      cache.input_dim != p.input_dim() || cache.hidden.cols() != T * B) {
    throw Error(ErrorCode::StaleCache, "cache does not belong to this network and batch");
  }

  auto grads = GruParams<Scalar>::zeros(p.input_dim(), H);
  RowVectorX<Scalar> d_logit(B);
  for (Eigen::Index s = 0; s < B; ++s) {
    d_logit[s] = (cache.probability[s] - static_cast<Scalar>(targets[static_cast<std::size_t>(s)])) /
                 static_cast<Scalar>(B);
  }
  grads.w_out.noalias() = cache.features * d_logit.transpose();
  grads.b_out(0) = d_logit.sum();

  MatrixX<Scalar> d_readout = p.w_out * d_logit;  // H x B
  if (cache.dropout_mask.size() > 0) {
    d_readout = (d_readout.array() * cache.dropout_mask.array()).matrix();
  }

  MatrixX<Scalar> d_pre(3 * H, T * B);     // gate pre-activation gradients
  MatrixX<Scalar> h_prev_all(H, T * B);    // h_{t-1} per step
  MatrixX<Scalar> rh_all(H, T * B);        // r_t * h_{t-1}
  MatrixX<Scalar> dh = MatrixX<Scalar>::Zero(H, B);
  MatrixX<Scalar> d_rh(H, B);
  const MatrixX<Scalar> zero_state = MatrixX<Scalar>::Zero(H, B);

  for (Eigen::Index t = T - 1; t >= 0; --t) {
    for (Eigen::Index s = 0; s < B; ++s) {
      if (cache.readout_step[static_cast<std::size_t>(s)] == t + 1) dh.col(s) += d_readout.col(s);
    }
    const auto g = cache.gates.middleCols(t * B, B);
    const auto z = g.topRows(H).array();
    const auto r = g.middleRows(H, H).array();
    const auto c = g.bottomRows(H).array();
    const auto h_prev = t > 0 ? cache.hidden.middleCols((t - 1) * B, B) : zero_state.middleCols(0, B);
    h_prev_all.middleCols(t * B, B) = h_prev;
    rh_all.middleCols(t * B, B) = (r * h_prev.array()).matrix();

    auto dp = d_pre.middleCols(t * B, B);
    // candidate
    dp.bottomRows(H) = (dh.array() * z * (Scalar(1) - c.square())).matrix();
    d_rh.noalias() = p.U.bottomRows(H).transpose() * dp.bottomRows(H);
    // update and reset gates
    dp.topRows(H) = (dh.array() * (c - h_prev.array()) * z * (Scalar(1) - z)).matrix();
    dp.middleRows(H, H) = (d_rh.array() * h_prev.array() * r * (Scalar(1) - r)).matrix();

    MatrixX<Scalar> dh_prev = (dh.array() * (Scalar(1) - z) + d_rh.array() * r).matrix();
    dh_prev.noalias() += p.U.topRows(2 * H).transpose() * dp.topRows(2 * H);
    dh = std::move(dh_prev);
  }

  grads.W.noalias() = d_pre * cache.inputs.transpose();
  grads.b = d_pre.rowwise().sum();
  grads.U.topRows(2 * H).noalias() = d_pre.topRows(2 * H) * h_prev_all.transpose();
  grads.U.bottomRows(H).noalias() = d_pre.bottomRows(H) * rh_all.transpose();
  return grads;
}

/// Adam moment estimates.
template <typename Scalar>
struct AdamState {
  GruParams<Scalar> m;
  GruParams<Scalar> v;

  static AdamState zeros_like(const GruParams<Scalar>& p) {
    return {GruParams<Scalar>::zeros(p.input_dim(), p.hidden_dim()),
            GruParams<Scalar>::zeros(p.input_dim(), p.hidden_dim())};
  }
};

struct AdamConfig {
  double learning_rate = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam step; `step` counts updates from 1.
template <typename Scalar>
void adam_update(GruParams<Scalar>& params, const GruParams<Scalar>& grads,
                 AdamState<Scalar>& state, long step, const AdamConfig& config) {
  if (step < 1) throw Error(ErrorCode::InvalidArgument, "adam step counts from 1");
  const Scalar b1 = static_cast<Scalar>(config.beta1);
  const Scalar b2 = static_cast<Scalar>(config.beta2);
  const Scalar lr = static_cast<Scalar>(config.learning_rate);
  const Scalar eps = static_cast<Scalar>(config.epsilon);
  const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(config.beta1, static_cast<double>(step)));
  const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(config.beta2, static_cast<double>(step)));
  auto& m = state.m;
  auto& v = state.v;
  visit_params(
      [&](auto& w, const auto& g, auto& mm, auto& vv) {
        mm = b1 * mm + (Scalar(1) - b1) * g;
        vv = b2 * vv + (Scalar(1) - b2) * g.cwiseAbs2();
        w.array() -= lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + eps);
      },
      params, grads, m, v);
}

/// Largest relative error between the analytic gradient and central
/// differences (L(w + eps) - L(w - eps)) / 2 eps over every parameter.
/// Dropout, when present in `mask`, is replayed identically in every pass.
template <typename Scalar>
double gradient_check(const GruParams<Scalar>& params, const MatrixX<Scalar>& inputs,
                      Eigen::Index batch, std::span<const int> targets, double eps,
                      std::span<const Eigen::Index> readout_step = {},
                      const MatrixX<Scalar>* mask = nullptr) {
  const auto cache = gru_forward(params, inputs, batch, readout_step, 0.0, nullptr, mask);
  const auto analytic = gru_backward(params, cache, targets);
  auto loss = [&](const GruParams<Scalar>& p) {
    const auto c = gru_forward(p, inputs, batch, readout_step, 0.0, nullptr, mask);
    return static_cast<double>(mean_bce(c.probability, targets));
  };
  GruParams<Scalar> probe = params;
  double worst = 0.0;
  visit_params(
      [&](auto& w, const auto& g) {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
          const Scalar saved = w.data()[i];
          w.data()[i] = saved + static_cast<Scalar>(eps);
          const double plus = loss(probe);
          w.data()[i] = saved - static_cast<Scalar>(eps);
          const double minus = loss(probe);
          w.data()[i] = saved;
          const double numeric = (plus - minus) / (2.0 * eps);
          const double a = static_cast<double>(g.data()[i]);
          const double rel = std::abs(a - numeric) /
                             std::max({std::abs(a), std::abs(numeric), 1e-12});
          worst = std::max(worst, rel);
        }
      },
      probe, analytic);
  return worst;
}

}  // namespace handproof
