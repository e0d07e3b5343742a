#pragma once

#include <Eigen/Dense>
#include <vector>

namespace trajscope {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Single-layer GRU. Gate weights are stacked row-wise as
/// [reset; update; candidate], each block d_hid tall. The reset gate is
/// applied to the hidden contribution of the candidate,
///   n = tanh(W_in x + b_in + r .* (W_hn h + b_hn)),
/// and the state update is h' = (1 - z) .* n + z .* h.
template <typename S>
struct GruParams {
  MatX<S> w_x;  // 3H x D
  MatX<S> w_h;  // 3H x H
  VecX<S> b_x;  // 3H
  VecX<S> b_h;  // 3H

  int hidden() const { return static_cast<int>(w_h.cols()); }
  int input() const { return static_cast<int>(w_x.cols()); }
};

/// Everything the backward pass needs, one entry per time step. States are
/// column-batched: each matrix is d_hid x B (or D x B for inputs), one
/// column per sequence in the group.
template <typename S>
struct GruCache {
  std::vector<MatX<S>> x;       // step inputs, D x B
  std::vector<MatX<S>> h_prev;  // state before the step, H x B
  std::vector<MatX<S>> r, z, n; // gate activations, H x B
  std::vector<MatX<S>> a;       // W_hn h_prev + b_hn, H x B
  std::vector<MatX<S>> h;       // state after the step, H x B

  void clear() {
    x.clear(); h_prev.clear(); r.clear(); z.clear(); n.clear(); a.clear(); h.clear();
  }
  std::size_t steps() const { return h.size(); }
};

template <typename S>
MatX<S> sigmoid(const MatX<S>& m) {
  return (S(1) / (S(1) + (-m.array()).exp())).matrix();
}

/// One forward step over a column batch; appends to the cache and returns
/// the new state.
template <typename S>
const MatX<S>& gru_step(const GruParams<S>& p, const MatX<S>& x, const MatX<S>& h_prev,
                        GruCache<S>& cache) {
  const int hd = p.hidden();
  MatX<S> px = p.w_x * x;
  px.colwise() += p.b_x;
  MatX<S> ph = p.w_h * h_prev;
  ph.colwise() += p.b_h;

  MatX<S> r = sigmoid<S>(px.topRows(hd) + ph.topRows(hd));
  MatX<S> z = sigmoid<S>(px.middleRows(hd, hd) + ph.middleRows(hd, hd));
  MatX<S> a = ph.bottomRows(hd);
  MatX<S> n = (px.bottomRows(hd) + r.cwiseProduct(a)).array().tanh().matrix();
  MatX<S> h = ((S(1) - z.array()) * n.array() + z.array() * h_prev.array()).matrix();

  cache.x.push_back(x);
  cache.h_prev.push_back(h_prev);
  cache.r.push_back(std::move(r));
  cache.z.push_back(std::move(z));
  cache.n.push_back(std::move(n));
  cache.a.push_back(std::move(a));
  cache.h.push_back(std::move(h));
  return cache.h.back();
}

/// Reverse accumulation for one step. d_h is the gradient arriving at the
/// step's output state; on return it holds the gradient for h_prev.
/// The input gradient is written to d_x; parameter gradients accumulate
/// into grad.
template <typename S>
void gru_step_backward(const GruParams<S>& p, const GruCache<S>& cache, std::size_t t,
                       MatX<S>& d_h, MatX<S>& d_x, GruParams<S>& grad) {
  const int hd = p.hidden();
  const MatX<S>& r = cache.r[t];
  const MatX<S>& z = cache.z[t];
  const MatX<S>& n = cache.n[t];
  const MatX<S>& a = cache.a[t];
  const MatX<S>& h_prev = cache.h_prev[t];

  const MatX<S> d_n = (d_h.array() * (S(1) - z.array())).matrix();
  const MatX<S> d_z = (d_h.array() * (h_prev.array() - n.array())).matrix();
  MatX<S> d_h_prev = (d_h.array() * z.array()).matrix();

  const MatX<S> d_pre_n = (d_n.array() * (S(1) - n.array().square())).matrix();
  const MatX<S> d_pre_z = (d_z.array() * z.array() * (S(1) - z.array())).matrix();
  const MatX<S> d_r = (d_pre_n.array() * a.array()).matrix();
  const MatX<S> d_a = (d_pre_n.array() * r.array()).matrix();
  const MatX<S> d_pre_r = (d_r.array() * r.array() * (S(1) - r.array())).matrix();

  MatX<S> d_pre_x(3 * hd, d_h.cols());
  d_pre_x.topRows(hd) = d_pre_r;
  d_pre_x.middleRows(hd, hd) = d_pre_z;
  d_pre_x.bottomRows(hd) = d_pre_n;

  MatX<S> d_pre_h(3 * hd, d_h.cols());
  d_pre_h.topRows(hd) = d_pre_r;
  d_pre_h.middleRows(hd, hd) = d_pre_z;
  d_pre_h.bottomRows(hd) = d_a;

  grad.w_x.noalias() += d_pre_x * cache.x[t].transpose();
  grad.b_x += d_pre_x.rowwise().sum();
  grad.w_h.noalias() += d_pre_h * h_prev.transpose();
  grad.b_h += d_pre_h.rowwise().sum();

  d_x.noalias() = p.w_x.transpose() * d_pre_x;
  d_h_prev.noalias() += p.w_h.transpose() * d_pre_h;
  d_h = std::move(d_h_prev);
}

template <typename S>
GruParams<S> zeros_like(const GruParams<S>& p) {
  GruParams<S> g;
  g.w_x = MatX<S>::Zero(p.w_x.rows(), p.w_x.cols());
  g.w_h = MatX<S>::Zero(p.w_h.rows(), p.w_h.cols());
  g.b_x = VecX<S>::Zero(p.b_x.size());
  g.b_h = VecX<S>::Zero(p.b_h.size());
  return g;
}

}  // namespace trajscope
