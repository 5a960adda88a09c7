#include "grud/cells.hpp"

#include <cmath>
#include <string>

#include "grud/error.hpp"

namespace grud {
namespace {

void expect_len(const Vec& v, std::size_t n, const char* what, const char* op) {
  if (v.size() != n) {
    throw DimensionError(std::string(op) + ": " + what + " has length " +
                         std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

Vec affine(const Mat& w, const Vec& x, const Mat& u, const Vec& h, const Vec& b) {
  Vec a = matvec(w, x);
  axpy(1.0, matvec(u, h), a);
  axpy(1.0, b, a);
  return a;
}

// d sigma(a) / da expressed through s = sigma(a).
Vec sigmoid_grad(const Vec& upstream, const Vec& s) {
  Vec out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = upstream[i] * s[i] * (1.0 - s[i]);
  return out;
}

Vec tanh_grad(const Vec& upstream, const Vec& t) {
  Vec out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = upstream[i] * (1.0 - t[i] * t[i]);
  return out;
}

// Core GRU update with optional extra pre-activation terms (GRU-D's V m).
GruCache gru_core(const GruParams& p, const Vec& x, const Vec& h_prev,
                  const Vec* extra_r, const Vec* extra_z, const Vec* extra_h) {
  const std::size_t hidden = p.hidden_size();
  expect_len(x, p.input_dim(), "input", "gru_step");
  expect_len(h_prev, hidden, "hidden state", "gru_step");

  GruCache c;
  c.x = x;
  c.h_prev = h_prev;

  Vec a_r = affine(p.w_r, x, p.u_r, h_prev, p.b_r);
  Vec a_z = affine(p.w_z, x, p.u_z, h_prev, p.b_z);
  if (extra_r) axpy(1.0, *extra_r, a_r);
  if (extra_z) axpy(1.0, *extra_z, a_z);
  c.r = sigmoid(a_r);
  c.z = sigmoid(a_z);
  c.r_h = hadamard(c.r, h_prev);

  Vec a_h = affine(p.w_h, x, p.u_h, c.r_h, p.b_h);
  if (extra_h) axpy(1.0, *extra_h, a_h);
  c.candidate = tanh_vec(a_h);

  c.h = Vec(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    c.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.candidate[i];
  }
  return c;
}

}  // namespace

Vec decay_rate(const Mat& w, const Vec& b, const Vec& delta) {
  Vec pre = matvec(w, delta);
  expect_len(b, pre.size(), "decay bias", "decay_rate");
  for (std::size_t i = 0; i < pre.size(); ++i) {
    pre[i] = std::exp(-std::max(0.0, pre[i] + b[i]));
  }
  return pre;
}

GruCache gru_step(const GruParams& p, const Vec& x, const Vec& h_prev) {
  return gru_core(p, x, h_prev, nullptr, nullptr, nullptr);
}

GrudCache grud_step(const GrudParams& p, const Vec& x, const Vec& mask,
                    const Vec& delta, const Vec& x_last, const Vec& h_prev) {
  const std::size_t dims = p.input_dim();
  const std::size_t hidden = p.hidden_size();
  expect_len(x, dims, "input", "grud_step");
  expect_len(mask, dims, "mask", "grud_step");
  expect_len(delta, dims, "delta", "grud_step");
  expect_len(h_prev, hidden, "hidden state", "grud_step");
  if (x_last.size() != dims || !all_finite(x_last.values())) {
    throw DataError("grud_step: last-observation vector is unset");
  }
  if (p.x_mean.size() != dims || !all_finite(p.x_mean.values())) {
    throw DataError("grud_step: empirical mean is unset");
  }

  GrudCache c;
  c.x_raw = x;
  c.mask = mask;
  c.delta = delta;
  c.x_last = x_last;
  c.h_prev = h_prev;

  c.pre_gx = matvec(p.w_gx, delta);
  axpy(1.0, p.b_gx, c.pre_gx);
  c.pre_gh = matvec(p.w_gh, delta);
  axpy(1.0, p.b_gh, c.pre_gh);
  c.gamma_x = Vec(dims);
  c.gamma_h = Vec(hidden);
  for (std::size_t d = 0; d < dims; ++d) c.gamma_x[d] = std::exp(-std::max(0.0, c.pre_gx[d]));
  for (std::size_t j = 0; j < hidden; ++j) c.gamma_h[j] = std::exp(-std::max(0.0, c.pre_gh[j]));

  Vec x_hat(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    if (mask[d] == 1.0) {
      x_hat[d] = x[d];
    } else {
      x_hat[d] = c.gamma_x[d] * x_last[d] + (1.0 - c.gamma_x[d]) * p.x_mean[d];
    }
  }
  const Vec h_hat = hadamard(c.gamma_h, h_prev);
  const Vec e_r = matvec(p.v_r, mask);
  const Vec e_z = matvec(p.v_z, mask);
  const Vec e_h = matvec(p.v_h, mask);
  c.core = gru_core(p.gru, x_hat, h_hat, &e_r, &e_z, &e_h);
  return c;
}

LstmCache lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                    const Vec& c_prev) {
  const std::size_t hidden = p.hidden_size();
  expect_len(x, p.input_dim(), "input", "lstm_step");
  expect_len(h_prev, hidden, "hidden state", "lstm_step");
  expect_len(c_prev, hidden, "cell state", "lstm_step");

  LstmCache c;
  c.x = x;
  c.h_prev = h_prev;
  c.c_prev = c_prev;
  c.i = sigmoid(affine(p.w_i, x, p.u_i, h_prev, p.b_i));
  c.f = sigmoid(affine(p.w_f, x, p.u_f, h_prev, p.b_f));
  c.o = sigmoid(affine(p.w_o, x, p.u_o, h_prev, p.b_o));
  c.g = tanh_vec(affine(p.w_c, x, p.u_c, h_prev, p.b_c));
  c.c = Vec(hidden);
  for (std::size_t j = 0; j < hidden; ++j) c.c[j] = c.f[j] * c_prev[j] + c.i[j] * c.g[j];
  c.tanh_c = tanh_vec(c.c);
  c.h = hadamard(c.o, c.tanh_c);
  return c;
}

DenseCache dense_step(const DenseParams& p, const Vec& x) {
  DenseCache c;
  c.x = x;
  Vec a = matvec(p.w, x);
  expect_len(p.b, a.size(), "bias", "dense_step");
  axpy(1.0, p.b, a);
  c.y = p.activation == Activation::Tanh ? tanh_vec(a) : a;
  return c;
}

GruStepGrad step_backward(const GruParams& p, const GruCache& c, const Vec& grad_h,
                          GruParams& g) {
  const std::size_t hidden = p.hidden_size();
  expect_len(grad_h, hidden, "upstream gradient", "gru backward");
  if (c.h.size() != hidden || c.x.size() != p.input_dim()) {
    throw DimensionError("gru backward: cache does not match parameters");
  }

  Vec d_z(hidden), d_cand(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    d_z[j] = grad_h[j] * (c.candidate[j] - c.h_prev[j]);
    d_cand[j] = grad_h[j] * c.z[j];
  }
  GruStepGrad out;
  out.pre_z = sigmoid_grad(d_z, c.z);
  out.pre_h = tanh_grad(d_cand, c.candidate);

  const Vec d_rh = matvec_transposed(p.u_h, out.pre_h);
  out.pre_r = sigmoid_grad(hadamard(d_rh, c.h_prev), c.r);

  out.h_prev = Vec(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    out.h_prev[j] = grad_h[j] * (1.0 - c.z[j]) + d_rh[j] * c.r[j];
  }
  matvec_transposed_acc(p.u_r, out.pre_r, out.h_prev);
  matvec_transposed_acc(p.u_z, out.pre_z, out.h_prev);

  out.x = Vec(p.input_dim());
  matvec_transposed_acc(p.w_r, out.pre_r, out.x);
  matvec_transposed_acc(p.w_z, out.pre_z, out.x);
  matvec_transposed_acc(p.w_h, out.pre_h, out.x);

  add_outer(g.w_r, out.pre_r, c.x);
  add_outer(g.w_z, out.pre_z, c.x);
  add_outer(g.w_h, out.pre_h, c.x);
  add_outer(g.u_r, out.pre_r, c.h_prev);
  add_outer(g.u_z, out.pre_z, c.h_prev);
  add_outer(g.u_h, out.pre_h, c.r_h);
  axpy(1.0, out.pre_r, g.b_r);
  axpy(1.0, out.pre_z, g.b_z);
  axpy(1.0, out.pre_h, g.b_h);
  return out;
}

GrudStepGrad step_backward(const GrudParams& p, const GrudCache& c, const Vec& grad_h,
                           GrudParams& g) {
  const std::size_t dims = p.input_dim();
  const std::size_t hidden = p.hidden_size();
  if (c.mask.size() != dims || c.h_prev.size() != hidden) {
    throw DimensionError("grud backward: cache does not match parameters");
  }
  const GruStepGrad core = step_backward(p.gru, c.core, grad_h, g.gru);

  add_outer(g.v_r, core.pre_r, c.mask);
  add_outer(g.v_z, core.pre_z, c.mask);
  add_outer(g.v_h, core.pre_h, c.mask);

  // Hidden decay: h_hat = gamma_h * h_prev.
  GrudStepGrad out;
  out.x_hat = core.x;
  out.h_prev = hadamard(core.h_prev, c.gamma_h);
  Vec d_pre_gh(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    if (c.pre_gh[j] >= 0.0) d_pre_gh[j] = -c.gamma_h[j] * core.h_prev[j] * c.h_prev[j];
  }
  add_outer(g.w_gh, d_pre_gh, c.delta);
  axpy(1.0, d_pre_gh, g.b_gh);

  // Input decay only matters where the value was missing.
  Vec d_pre_gx(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    if (c.mask[d] == 1.0 || !(c.pre_gx[d] >= 0.0)) continue;
    const double d_gamma = core.x[d] * (c.x_last[d] - p.x_mean[d]);
    d_pre_gx[d] = -c.gamma_x[d] * d_gamma;
  }
  if (p.diagonal_input_decay) {
    for (std::size_t d = 0; d < dims; ++d) g.w_gx(d, d) += d_pre_gx[d] * c.delta[d];
  } else {
    add_outer(g.w_gx, d_pre_gx, c.delta);
  }
  axpy(1.0, d_pre_gx, g.b_gx);
  return out;
}

LstmStepGrad step_backward(const LstmParams& p, const LstmCache& c, const Vec& grad_h,
                           const Vec& grad_c, LstmParams& g) {
  const std::size_t hidden = p.hidden_size();
  expect_len(grad_h, hidden, "upstream gradient", "lstm backward");
  expect_len(grad_c, hidden, "upstream cell gradient", "lstm backward");
  if (c.h.size() != hidden || c.x.size() != p.input_dim()) {
    throw DimensionError("lstm backward: cache does not match parameters");
  }

  Vec d_o(hidden), d_c(hidden), d_f(hidden), d_i(hidden), d_g(hidden);
  LstmStepGrad out;
  out.c_prev = Vec(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    d_o[j] = grad_h[j] * c.tanh_c[j];
    d_c[j] = grad_c[j] + grad_h[j] * c.o[j] * (1.0 - c.tanh_c[j] * c.tanh_c[j]);
    d_f[j] = d_c[j] * c.c_prev[j];
    d_i[j] = d_c[j] * c.g[j];
    d_g[j] = d_c[j] * c.i[j];
    out.c_prev[j] = d_c[j] * c.f[j];
  }
  const Vec a_i = sigmoid_grad(d_i, c.i);
  const Vec a_f = sigmoid_grad(d_f, c.f);
  const Vec a_o = sigmoid_grad(d_o, c.o);
  const Vec a_g = tanh_grad(d_g, c.g);

  out.x = Vec(p.input_dim());
  out.h_prev = Vec(hidden);
  const struct {
    const Mat& w;
    const Mat& u;
    const Vec& a;
    Mat& gw;
    Mat& gu;
    Vec& gb;
  } gates[] = {{p.w_i, p.u_i, a_i, g.w_i, g.u_i, g.b_i},
               {p.w_f, p.u_f, a_f, g.w_f, g.u_f, g.b_f},
               {p.w_o, p.u_o, a_o, g.w_o, g.u_o, g.b_o},
               {p.w_c, p.u_c, a_g, g.w_c, g.u_c, g.b_c}};
  for (const auto& gate : gates) {
    matvec_transposed_acc(gate.w, gate.a, out.x);
    matvec_transposed_acc(gate.u, gate.a, out.h_prev);
    add_outer(gate.gw, gate.a, c.x);
    add_outer(gate.gu, gate.a, c.h_prev);
    axpy(1.0, gate.a, gate.gb);
  }
  return out;
}

Vec step_backward(const DenseParams& p, const DenseCache& c, const Vec& grad_y,
                  DenseParams& g) {
  expect_len(grad_y, p.w.rows(), "upstream gradient", "dense backward");
  if (c.x.size() != p.w.cols()) {
    throw DimensionError("dense backward: cache does not match parameters");
  }
  const Vec d_a = p.activation == Activation::Tanh ? tanh_grad(grad_y, c.y) : grad_y;
  add_outer(g.w, d_a, c.x);
  axpy(1.0, d_a, g.b);
  return matvec_transposed(p.w, d_a);
}

namespace {

Mat random_mat(std::size_t rows, std::size_t cols, Rng& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(cols));
  return Mat(rows, cols, sample_normal(rng, rows * cols, stddev).raw());
}

void check_sizes(std::size_t input_dim, std::size_t hidden, const char* what) {
  if (input_dim == 0 || hidden == 0) {
    throw ConfigError(std::string(what) + ": input and hidden sizes must be >= 1");
  }
}

}  // namespace

GruParams init_gru(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  check_sizes(input_dim, hidden, "init_gru");
  GruParams p;
  p.w_r = random_mat(hidden, input_dim, rng);
  p.w_z = random_mat(hidden, input_dim, rng);
  p.w_h = random_mat(hidden, input_dim, rng);
  p.u_r = random_mat(hidden, hidden, rng);
  p.u_z = random_mat(hidden, hidden, rng);
  p.u_h = random_mat(hidden, hidden, rng);
  p.b_r = Vec(hidden);
  p.b_z = Vec(hidden);
  p.b_h = Vec(hidden);
  return p;
}

GrudParams init_grud(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  GrudParams p;
  p.gru = init_gru(input_dim, hidden, rng);
  p.v_r = random_mat(hidden, input_dim, rng);
  p.v_z = random_mat(hidden, input_dim, rng);
  p.v_h = random_mat(hidden, input_dim, rng);
  p.w_gx = Mat(input_dim, input_dim);
  p.b_gx = Vec(input_dim);
  p.w_gh = Mat(hidden, input_dim);
  p.b_gh = Vec(hidden);
  p.x_mean = Vec(input_dim);
  return p;
}

LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  check_sizes(input_dim, hidden, "init_lstm");
  LstmParams p;
  for (Mat* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_c}) *w = random_mat(hidden, input_dim, rng);
  for (Mat* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_c}) *u = random_mat(hidden, hidden, rng);
  for (Vec* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) *b = Vec(hidden);
  return p;
}

DenseParams init_dense(std::size_t input_dim, std::size_t output_dim,
                       Activation activation, Rng& rng) {
  check_sizes(input_dim, output_dim, "init_dense");
  DenseParams p;
  p.w = random_mat(output_dim, input_dim, rng);
  p.b = Vec(output_dim);
  p.activation = activation;
  return p;
}

}  // namespace grud
