#pragma once
// Single-step forward and reverse-mode computations for the recurrent and
// feed-forward cells: GRU, GRU-D (GRU with learned input/hidden decay and
// mask-conditioned gates), LSTM and a dense layer.
//
// Every parameter struct exposes visit(f), calling f(name, span) once per
// tensor in a fixed order. Gradient accumulators are parameter structs of
// the same shape (see zeros_like).

#include <span>
#include <string_view>

#include "grud/linalg.hpp"

namespace grud {

struct GruParams {
  Mat w_r, w_z, w_h;  // H x D
  Mat u_r, u_z, u_h;  // H x H
  Vec b_r, b_z, b_h;  // H

  std::size_t input_dim() const { return w_r.cols(); }
  std::size_t hidden_size() const { return w_r.rows(); }

  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    f("w_r", p.w_r.values());
    f("w_z", p.w_z.values());
    f("w_h", p.w_h.values());
    f("u_r", p.u_r.values());
    f("u_z", p.u_z.values());
    f("u_h", p.u_h.values());
    f("b_r", p.b_r.values());
    f("b_z", p.b_z.values());
    f("b_h", p.b_h.values());
  }
};

struct GrudParams {
  GruParams gru;
  Mat v_r, v_z, v_h;  // H x D, act on the mask
  Mat w_gx;           // D x D input-decay weights
  Vec b_gx;           // D
  Mat w_gh;           // H x D hidden-decay weights
  Vec b_gh;           // H
  // Training-set mean of each input variable; frozen, never trained.
  Vec x_mean;
  // When set, off-diagonal entries of w_gx stay zero (per-variable decay).
  bool diagonal_input_decay = true;

  std::size_t input_dim() const { return gru.input_dim(); }
  std::size_t hidden_size() const { return gru.hidden_size(); }

  /// Trainable tensors only; x_mean is excluded.
  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    p.gru.visit(f);
    f("v_r", p.v_r.values());
    f("v_z", p.v_z.values());
    f("v_h", p.v_h.values());
    f("w_gx", p.w_gx.values());
    f("b_gx", p.b_gx.values());
    f("w_gh", p.w_gh.values());
    f("b_gh", p.b_gh.values());
  }
};

struct LstmParams {
  Mat w_i, w_f, w_o, w_c;  // H x D
  Mat u_i, u_f, u_o, u_c;  // H x H
  Vec b_i, b_f, b_o, b_c;  // H

  std::size_t input_dim() const { return w_i.cols(); }
  std::size_t hidden_size() const { return w_i.rows(); }

  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    f("w_i", p.w_i.values());
    f("w_f", p.w_f.values());
    f("w_o", p.w_o.values());
    f("w_c", p.w_c.values());
    f("u_i", p.u_i.values());
    f("u_f", p.u_f.values());
    f("u_o", p.u_o.values());
    f("u_c", p.u_c.values());
    f("b_i", p.b_i.values());
    f("b_f", p.b_f.values());
    f("b_o", p.b_o.values());
    f("b_c", p.b_c.values());
  }
};

enum class Activation { Identity, Tanh };

struct DenseParams {
  Mat w;  // out x in
  Vec b;  // out
  Activation activation = Activation::Tanh;

  template <class F>
  void visit(F&& f) { f("w", w.values()); f("b", b.values()); }
  template <class F>
  void visit(F&& f) const { f("w", w.values()); f("b", b.values()); }
};

/// Copy of `p` with every trainable entry set to zero.
template <class P>
P zeros_like(const P& p) {
  P out = p;
  out.visit([](std::string_view, std::span<double> t) {
    for (double& v : t) v = 0.0;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Caches

struct GruCache {
  Vec x, h_prev;
  Vec r, z, candidate;
  Vec r_h;  // r * h_prev
  Vec h;
};

struct GrudCache {
  Vec x_raw;   // input as given; NaN where masked
  Vec mask, delta, x_last;
  Vec pre_gx, gamma_x;  // input decay
  Vec pre_gh, gamma_h;  // hidden decay
  Vec h_prev;           // undecayed carried state
  GruCache core;        // core.x = decayed input, core.h_prev = decayed state
};

struct LstmCache {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g;
  Vec c, tanh_c, h;
};

struct DenseCache {
  Vec x, y;
};

// ---------------------------------------------------------------------------
// Forward

/// exp(-max(0, W delta + b)); every entry lies in (0, 1].
Vec decay_rate(const Mat& w, const Vec& b, const Vec& delta);

GruCache gru_step(const GruParams& p, const Vec& x, const Vec& h_prev);

/// `x_last` holds the most recent observation of each variable (or the
/// training mean when none has been seen yet). Missing entries of `x`
/// (mask 0) are never read.
GrudCache grud_step(const GrudParams& p, const Vec& x, const Vec& mask,
                    const Vec& delta, const Vec& x_last, const Vec& h_prev);

LstmCache lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                    const Vec& c_prev);

DenseCache dense_step(const DenseParams& p, const Vec& x);

// ---------------------------------------------------------------------------
// Backward. Each accumulates parameter gradients into `grads` and returns
// the gradients flowing to the step's inputs.

struct GruStepGrad {
  Vec x, h_prev;
  Vec pre_r, pre_z, pre_h;  // gradients of the three gate pre-activations
};
GruStepGrad step_backward(const GruParams& p, const GruCache& cache,
                          const Vec& grad_h, GruParams& grads);

struct GrudStepGrad {
  Vec x_hat, h_prev;
};
GrudStepGrad step_backward(const GrudParams& p, const GrudCache& cache,
                           const Vec& grad_h, GrudParams& grads);

struct LstmStepGrad {
  Vec x, h_prev, c_prev;
};
LstmStepGrad step_backward(const LstmParams& p, const LstmCache& cache,
                           const Vec& grad_h, const Vec& grad_c, LstmParams& grads);

/// Returns the gradient with respect to the layer input.
Vec step_backward(const DenseParams& p, const DenseCache& cache, const Vec& grad_y,
                  DenseParams& grads);

// ---------------------------------------------------------------------------
// Initialisation: weights ~ N(0, (1/sqrt(fan_in))^2), biases zero, decay
// parameters zero, x_mean zero (set it from training statistics).

GruParams init_gru(std::size_t input_dim, std::size_t hidden, Rng& rng);
GrudParams init_grud(std::size_t input_dim, std::size_t hidden, Rng& rng);
LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, Rng& rng);
DenseParams init_dense(std::size_t input_dim, std::size_t output_dim,
                       Activation activation, Rng& rng);

}  // namespace grud
