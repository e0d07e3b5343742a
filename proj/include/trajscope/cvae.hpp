#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "trajscope/gru.hpp"
#include "trajscope/rng.hpp"
#include "trajscope/scoring.hpp"

namespace trajscope {

struct HyperParams {
  int d_tok = 32;
  int d_agent = 16;
  int d_ctx = 16;
  int d_hid = 64;
  int d_z = 16;
  int mc_samples = 16;  // L, scoring-time Monte Carlo draws
  double lr = 1e-3;
  int epochs = 10;
  int batch_size = 64;
  int w_max = 32;
  std::uint64_t seed = 42;
  bool length_normalize = true;
};

class ShapeMismatchError : public std::runtime_error {
 public:
  explicit ShapeMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

class NonFiniteLossError : public std::runtime_error {
 public:
  explicit NonFiniteLossError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// All learnable tensors of the conditional VAE. Token embedding rows:
/// row 0 is PAD (reserved, never referenced), rows 1..V are grid tokens,
/// row V+1 is BOS. Agent embedding row 0 is the UNK fallback for agents
/// unseen in training.
template <typename S>
struct ModelParams {
  MatX<S> e_tok;     // (V+2) x d_tok
  MatX<S> e_agent;   // (n_agents+1) x d_agent
  MatX<S> w_ctx;     // d_ctx x k_poi; k_poi may be 0 for modes without POI input
  GruParams<S> enc;  // input d_tok + d_agent + d_ctx
  MatX<S> w_mu;      // d_z x d_hid
  VecX<S> b_mu;
  MatX<S> w_logvar;  // d_z x d_hid
  VecX<S> b_logvar;
  MatX<S> w_init;    // d_hid x (d_z + d_agent + d_ctx)
  GruParams<S> dec;
  MatX<S> w_out;     // V x d_hid
  VecX<S> b_out;

  int vocab() const { return static_cast<int>(w_out.rows()); }
  int d_tok() const { return static_cast<int>(e_tok.cols()); }
  int d_agent() const { return static_cast<int>(e_agent.cols()); }
  int d_ctx() const { return static_cast<int>(w_ctx.rows()); }
  int d_cond() const { return d_agent() + d_ctx(); }
  int d_hid() const { return static_cast<int>(w_out.cols()); }
  int d_z() const { return static_cast<int>(w_mu.rows()); }
  int k_poi() const { return static_cast<int>(w_ctx.cols()); }
  int n_agents() const { return static_cast<int>(e_agent.rows()) - 1; }

  int token_row(int token) const { return token + 1; }
  int bos_row() const { return static_cast<int>(e_tok.rows()) - 1; }
};

/// Visit every tensor in a fixed, documented order. Initialization, the
/// optimizer, serialization and the gradient check all rely on this order
/// being identical everywhere.
template <typename S, typename F>
void for_each_tensor(ModelParams<S>& p, F&& f) {
  f("e_tok", p.e_tok);
  f("e_agent", p.e_agent);
  f("w_ctx", p.w_ctx);
  f("enc.w_x", p.enc.w_x);
  f("enc.w_h", p.enc.w_h);
  f("enc.b_x", p.enc.b_x);
  f("enc.b_h", p.enc.b_h);
  f("w_mu", p.w_mu);
  f("b_mu", p.b_mu);
  f("w_logvar", p.w_logvar);
  f("b_logvar", p.b_logvar);
  f("w_init", p.w_init);
  f("dec.w_x", p.dec.w_x);
  f("dec.w_h", p.dec.w_h);
  f("dec.b_x", p.dec.b_x);
  f("dec.b_h", p.dec.b_h);
  f("w_out", p.w_out);
  f("b_out", p.b_out);
}

template <typename S, typename F>
void for_each_tensor(const ModelParams<S>& p, F&& f) {
  for_each_tensor(const_cast<ModelParams<S>&>(p), [&](const char* name, auto& t) {
    f(name, static_cast<const std::remove_reference_t<decltype(t)>&>(t));
  });
}

/// Visit matching tensors of two models in lockstep (e.g. params and
/// their gradients).
template <typename S, typename F>
void for_each_tensor_pair(ModelParams<S>& a, const ModelParams<S>& b, F&& f) {
  f("e_tok", a.e_tok, b.e_tok);
  f("e_agent", a.e_agent, b.e_agent);
  f("w_ctx", a.w_ctx, b.w_ctx);
  f("enc.w_x", a.enc.w_x, b.enc.w_x);
  f("enc.w_h", a.enc.w_h, b.enc.w_h);
  f("enc.b_x", a.enc.b_x, b.enc.b_x);
  f("enc.b_h", a.enc.b_h, b.enc.b_h);
  f("w_mu", a.w_mu, b.w_mu);
  f("b_mu", a.b_mu, b.b_mu);
  f("w_logvar", a.w_logvar, b.w_logvar);
  f("b_logvar", a.b_logvar, b.b_logvar);
  f("w_init", a.w_init, b.w_init);
  f("dec.w_x", a.dec.w_x, b.dec.w_x);
  f("dec.w_h", a.dec.w_h, b.dec.w_h);
  f("dec.b_x", a.dec.b_x, b.dec.b_x);
  f("dec.b_h", a.dec.b_h, b.dec.b_h);
  f("w_out", a.w_out, b.w_out);
  f("b_out", a.b_out, b.b_out);
}

template <typename S>
ModelParams<S> zeros_like(const ModelParams<S>& p) {
  ModelParams<S> g = p;
  for_each_tensor(g, [](const char*, auto& t) { t.setZero(); });
  return g;
}

/// Xavier-uniform matrices, zero biases, N(0, 0.1^2) embedding rows.
/// The fill order is the for_each_tensor order, coefficients in storage
/// order, so a seed pins every byte of the initial model.
template <typename S>
ModelParams<S> init_params(const HyperParams& hp, int vocab, int n_agents, int k_poi,
                           std::uint64_t seed) {
  ModelParams<S> p;
  const int d_cond = hp.d_agent + hp.d_ctx;
  const int d_in = hp.d_tok + d_cond;
  p.e_tok.resize(vocab + 2, hp.d_tok);
  p.e_agent.resize(n_agents + 1, hp.d_agent);
  p.w_ctx.resize(hp.d_ctx, k_poi);
  p.enc.w_x.resize(3 * hp.d_hid, d_in);
  p.enc.w_h.resize(3 * hp.d_hid, hp.d_hid);
  p.enc.b_x.resize(3 * hp.d_hid);
  p.enc.b_h.resize(3 * hp.d_hid);
  p.w_mu.resize(hp.d_z, hp.d_hid);
  p.b_mu.resize(hp.d_z);
  p.w_logvar.resize(hp.d_z, hp.d_hid);
  p.b_logvar.resize(hp.d_z);
  p.w_init.resize(hp.d_hid, hp.d_z + d_cond);
  p.dec.w_x.resize(3 * hp.d_hid, d_in);
  p.dec.w_h.resize(3 * hp.d_hid, hp.d_hid);
  p.dec.b_x.resize(3 * hp.d_hid);
  p.dec.b_h.resize(3 * hp.d_hid);
  p.w_out.resize(vocab, hp.d_hid);
  p.b_out.resize(vocab);

  Rng rng = Rng::stream(seed, 0x696e6974ull);  // "init"
  for_each_tensor(p, [&](const char* name, auto& t) {
    const std::string_view n(name);
    const bool bias = n.starts_with("b_") || n.find(".b_") != std::string_view::npos;
    const bool embedding = n.starts_with("e_");
    if (bias) {
      t.setZero();
      return;
    }
    if (embedding) {
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        t.data()[i] = static_cast<S>(rng.normal(0.0, 0.1));
      }
      return;
    }
    if (t.size() == 0) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = static_cast<S>(rng.uniform(-limit, limit));
    }
  });
  return p;
}

/// The conditioning signal c_i: agent embedding followed by the squashed
/// projection of the POI context counts. Either slice may be structurally
/// zero depending on the context mode.
template <typename S>
struct ContextVector {
  VecX<S> vec;
};

/// agent_row < 0 leaves the agent slice zero; an empty poi vector (with
/// k_poi == 0) leaves the POI slice zero.
template <typename S>
ContextVector<S> make_context(const ModelParams<S>& p, int agent_row, const VecX<S>& poi) {
  ContextVector<S> c;
  c.vec = VecX<S>::Zero(p.d_cond());
  if (agent_row >= 0) {
    if (agent_row >= static_cast<int>(p.e_agent.rows())) {
      throw ShapeMismatchError("agent row " + std::to_string(agent_row) + " out of table of " +
                               std::to_string(p.e_agent.rows()) + " rows");
    }
    c.vec.head(p.d_agent()) = p.e_agent.row(agent_row).transpose();
  }
  if (p.k_poi() > 0) {
    if (poi.size() != p.k_poi()) {
      throw ShapeMismatchError("poi context dim " + std::to_string(poi.size()) +
                               " != model k_poi " + std::to_string(p.k_poi()));
    }
    c.vec.tail(p.d_ctx()) = (p.w_ctx * poi).array().tanh().matrix();
  }
  return c;
}

template <typename S>
struct LatentPosterior {
  VecX<S> mu;
  VecX<S> logvar;  // clamped to [kLogvarMin, kLogvarMax]
};

/// Closed-form KL(N(mu, diag(exp(logvar))) || N(0, I)).
template <typename S>
S kl_standard_normal(const VecX<S>& mu, const VecX<S>& logvar) {
  return S(0.5) *
         (logvar.array().exp() + mu.array().square() - S(1) - logvar.array()).sum();
}

/// z = mu + exp(logvar / 2) .* eps  (pathwise reparameterization).
template <typename S>
VecX<S> reparameterize(const LatentPosterior<S>& post,
                       const std::type_identity_t<VecX<S>>& eps) {
  return post.mu + ((post.logvar.array() / S(2)).exp() * eps.array()).matrix();
}

// ---------------------------------------------------------------------------
// Column-batched forward/backward. A "group" is a set of sequences of equal
// length processed together; every matrix carries one column per sequence.
// ---------------------------------------------------------------------------

/// One training example: tokens plus the raw conditioning inputs.
template <typename S>
struct SeqExample {
  std::vector<int> tokens;
  int agent_row = -1;  // -1: agent slice zeroed; 0: UNK; >= 1: table row
  VecX<S> poi;         // size k_poi, or empty when the mode carries no POI input
};

template <typename S>
struct EncodeCache {
  GruCache<S> gru;
  MatX<S> h_last;       // d_hid x B
  MatX<S> mu, logvar;   // d_z x B
  MatX<S> logvar_open;  // 1 where the clamp is inactive, else 0
};

template <typename S>
struct DecodeCache {
  GruCache<S> gru;
  MatX<S> h0;                  // d_hid x B
  MatX<S> z, c;                // inputs the init layer saw
  std::vector<MatX<S>> probs;  // per step, V x B
};

template <typename S>
void check_tokens(const Eigen::MatrixXi& toks, const ModelParams<S>& p) {
  if (toks.rows() < 2) {
    throw ShapeMismatchError("sequence length " + std::to_string(toks.rows()) +
                             " below the minimum of 2");
  }
  for (Eigen::Index t = 0; t < toks.rows(); ++t) {
    for (Eigen::Index b = 0; b < toks.cols(); ++b) {
      if (toks(t, b) < 0 || toks(t, b) >= p.vocab()) {
        throw ShapeMismatchError("token " + std::to_string(toks(t, b)) +
                                 " outside vocabulary of " + std::to_string(p.vocab()));
      }
    }
  }
}

/// Encoder: GRU over [token embedding ; context] inputs, then linear
/// heads for mu and the clamped log-variance.
template <typename S>
void encode_group(const Eigen::MatrixXi& toks, const MatX<S>& c, const ModelParams<S>& p,
                  EncodeCache<S>& cache) {
  check_tokens(toks, p);
  const Eigen::Index w = toks.rows(), nb = toks.cols();
  if (c.rows() != p.d_cond() || c.cols() != nb) {
    throw ShapeMismatchError("context block is " + std::to_string(c.rows()) + "x" +
                             std::to_string(c.cols()) + ", expected " +
                             std::to_string(p.d_cond()) + "x" + std::to_string(nb));
  }
  const int dt = p.d_tok();
  MatX<S> h = MatX<S>::Zero(p.d_hid(), nb);
  MatX<S> x(dt + p.d_cond(), nb);
  for (Eigen::Index t = 0; t < w; ++t) {
    for (Eigen::Index b = 0; b < nb; ++b) {
      x.col(b).head(dt) = p.e_tok.row(p.token_row(toks(t, b))).transpose();
      x.col(b).tail(p.d_cond()) = c.col(b);
    }
    h = gru_step(p.enc, x, h, cache.gru);
  }
  cache.h_last = h;
  cache.mu = p.w_mu * h;
  cache.mu.colwise() += p.b_mu;
  MatX<S> pre = p.w_logvar * h;
  pre.colwise() += p.b_logvar;
  cache.logvar_open =
      ((pre.array() > S(kLogvarMin)) && (pre.array() < S(kLogvarMax))).template cast<S>();
  cache.logvar = pre.array().min(S(kLogvarMax)).max(S(kLogvarMin)).matrix();
}

/// Decoder: hidden state initialized from [z ; c], teacher forcing with a
/// BOS first input, categorical emission per step. Returns the raw (not
/// length-normalized) log-likelihood of each column's token sequence.
template <typename S>
VecX<S> decode_group(const Eigen::MatrixXi& toks, const MatX<S>& c, const MatX<S>& z,
                     const ModelParams<S>& p, DecodeCache<S>& cache) {
  check_tokens(toks, p);
  const Eigen::Index w = toks.rows(), nb = toks.cols();
  if (z.rows() != p.d_z() || z.cols() != nb) {
    throw ShapeMismatchError("latent block has wrong shape");
  }
  const int dt = p.d_tok();
  cache.z = z;
  cache.c = c;
  MatX<S> zc(p.d_z() + p.d_cond(), nb);
  zc.topRows(p.d_z()) = z;
  zc.bottomRows(p.d_cond()) = c;
  cache.h0 = (p.w_init * zc).array().tanh().matrix();

  VecX<S> loglik = VecX<S>::Zero(nb);
  MatX<S> h = cache.h0;
  MatX<S> x(dt + p.d_cond(), nb);
  for (Eigen::Index t = 0; t < w; ++t) {
    for (Eigen::Index b = 0; b < nb; ++b) {
      const int row = (t == 0) ? p.bos_row() : p.token_row(toks(t - 1, b));
      x.col(b).head(dt) = p.e_tok.row(row).transpose();
      x.col(b).tail(p.d_cond()) = c.col(b);
    }
    h = gru_step(p.dec, x, h, cache.gru);
    MatX<S> logits = p.w_out * h;
    logits.colwise() += p.b_out;
    MatX<S> probs(logits.rows(), nb);
    for (Eigen::Index b = 0; b < nb; ++b) {
      const S m = logits.col(b).maxCoeff();
      VecX<S> e = (logits.col(b).array() - m).exp().matrix();
      const S denom = e.sum();
      probs.col(b) = e / denom;
      loglik[b] += logits(toks(t, b), b) - m - std::log(denom);
    }
    cache.probs.push_back(std::move(probs));
  }
  return loglik;
}

/// Backward through the decoder. d_loglik scales each column's gradient;
/// returns gradients for z and c and accumulates parameter gradients.
template <typename S>
void decode_backward(const Eigen::MatrixXi& toks, const VecX<S>& d_loglik,
                     const ModelParams<S>& p, const DecodeCache<S>& cache, ModelParams<S>& grad,
                     MatX<S>& d_z, MatX<S>& d_c) {
  const Eigen::Index w = toks.rows(), nb = toks.cols();
  const int dt = p.d_tok();
  MatX<S> d_h = MatX<S>::Zero(p.d_hid(), nb);
  MatX<S> d_x(dt + p.d_cond(), nb);
  if (d_c.size() == 0) d_c = MatX<S>::Zero(p.d_cond(), nb);
  for (Eigen::Index t = w - 1; t >= 0; --t) {
    MatX<S> d_logits = -cache.probs[static_cast<std::size_t>(t)];
    for (Eigen::Index b = 0; b < nb; ++b) {
      d_logits(toks(t, b), b) += S(1);
      d_logits.col(b) *= d_loglik[b];
    }
    grad.w_out.noalias() += d_logits * cache.gru.h[static_cast<std::size_t>(t)].transpose();
    grad.b_out += d_logits.rowwise().sum();
    d_h.noalias() += p.w_out.transpose() * d_logits;

    gru_step_backward(p.dec, cache.gru, static_cast<std::size_t>(t), d_h, d_x, grad.dec);
    for (Eigen::Index b = 0; b < nb; ++b) {
      const int row = (t == 0) ? p.bos_row() : p.token_row(toks(t - 1, b));
      grad.e_tok.row(row) += d_x.col(b).head(dt).transpose();
      d_c.col(b) += d_x.col(b).tail(p.d_cond());
    }
  }
  // d_h now holds the gradient at h0 = tanh(w_init [z; c]).
  const MatX<S> d_pre = (d_h.array() * (S(1) - cache.h0.array().square())).matrix();
  MatX<S> zc(p.d_z() + p.d_cond(), nb);
  zc.topRows(p.d_z()) = cache.z;
  zc.bottomRows(p.d_cond()) = cache.c;
  grad.w_init.noalias() += d_pre * zc.transpose();
  const MatX<S> d_zc = p.w_init.transpose() * d_pre;
  d_z = d_zc.topRows(p.d_z());
  d_c += d_zc.bottomRows(p.d_cond());
}

/// Backward through the encoder heads and GRU; accumulates into grad and
/// adds the context gradient into d_c.
template <typename S>
void encode_backward(const Eigen::MatrixXi& toks, const MatX<S>& d_mu, const MatX<S>& d_logvar,
                     const ModelParams<S>& p, const EncodeCache<S>& cache, ModelParams<S>& grad,
                     MatX<S>& d_c) {
  const Eigen::Index w = toks.rows(), nb = toks.cols();
  const int dt = p.d_tok();
  const MatX<S> d_lv = (d_logvar.array() * cache.logvar_open.array()).matrix();
  grad.w_mu.noalias() += d_mu * cache.h_last.transpose();
  grad.b_mu += d_mu.rowwise().sum();
  grad.w_logvar.noalias() += d_lv * cache.h_last.transpose();
  grad.b_logvar += d_lv.rowwise().sum();

  MatX<S> d_h = p.w_mu.transpose() * d_mu;
  d_h.noalias() += p.w_logvar.transpose() * d_lv;
  MatX<S> d_x(dt + p.d_cond(), nb);
  if (d_c.size() == 0) d_c = MatX<S>::Zero(p.d_cond(), nb);
  for (Eigen::Index t = w - 1; t >= 0; --t) {
    gru_step_backward(p.enc, cache.gru, static_cast<std::size_t>(t), d_h, d_x, grad.enc);
    for (Eigen::Index b = 0; b < nb; ++b) {
      grad.e_tok.row(p.token_row(toks(t, b))) += d_x.col(b).head(dt).transpose();
      d_c.col(b) += d_x.col(b).tail(p.d_cond());
    }
  }
}

namespace detail {

/// Assemble the context block for a group and keep what backward needs.
template <typename S>
struct GroupContext {
  MatX<S> c;    // d_cond x B
  MatX<S> poi;  // k_poi x B (empty when k_poi == 0)
  std::vector<int> agent_rows;
};

template <typename S>
GroupContext<S> make_group_context(const ModelParams<S>& p,
                                   const std::vector<const SeqExample<S>*>& group) {
  const Eigen::Index nb = static_cast<Eigen::Index>(group.size());
  GroupContext<S> gc;
  gc.c = MatX<S>::Zero(p.d_cond(), nb);
  gc.agent_rows.resize(group.size());
  if (p.k_poi() > 0) gc.poi.resize(p.k_poi(), nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const SeqExample<S>& ex = *group[static_cast<std::size_t>(b)];
    gc.agent_rows[static_cast<std::size_t>(b)] = ex.agent_row;
    if (ex.agent_row >= 0) {
      gc.c.col(b).head(p.d_agent()) = p.e_agent.row(ex.agent_row).transpose();
    }
    if (p.k_poi() > 0) {
      if (ex.poi.size() != p.k_poi()) {
        throw ShapeMismatchError("poi context dim " + std::to_string(ex.poi.size()) +
                                 " != model k_poi " + std::to_string(p.k_poi()));
      }
      gc.poi.col(b) = ex.poi;
      gc.c.col(b).tail(p.d_ctx()) = (p.w_ctx * ex.poi).array().tanh().matrix();
    }
  }
  return gc;
}

/// Route the assembled-context gradient back to E_agent and W_ctx.
/// Structurally zeroed slices discard their gradient.
template <typename S>
void group_context_backward(const ModelParams<S>& p, const GroupContext<S>& gc,
                            const MatX<S>& d_c, ModelParams<S>& grad) {
  const Eigen::Index nb = d_c.cols();
  for (Eigen::Index b = 0; b < nb; ++b) {
    const int row = gc.agent_rows[static_cast<std::size_t>(b)];
    if (row >= 0) grad.e_agent.row(row) += d_c.col(b).head(p.d_agent()).transpose();
  }
  if (p.k_poi() > 0) {
    const MatX<S> y = gc.c.bottomRows(p.d_ctx());
    const MatX<S> d_pre =
        (d_c.bottomRows(p.d_ctx()).array() * (S(1) - y.array().square())).matrix();
    grad.w_ctx.noalias() += d_pre * gc.poi.transpose();
  }
}

}  // namespace detail

/// One-sample ELBO loss over a batch: mean over sequences of
/// (-recon_loglik + KL(q || N(0, I))). recon_loglik is per-token when
/// length_normalize is set; the KL term is never length-normalized.
/// Latent noise is drawn from rng one sequence at a time in batch order,
/// so the value is a pure function of (batch, params, rng state).
/// When grad is non-null, gradients for every tensor (including the
/// embedding rows touched) are accumulated into it by reverse-mode
/// differentiation through the decoder, the reparameterization, the
/// encoder and the context assembly.
template <typename S>
S elbo_loss(const std::vector<SeqExample<S>>& batch, const ModelParams<S>& p,
            const HyperParams& hp, Rng& rng, std::type_identity_t<ModelParams<S>>* grad) {
  if (batch.empty()) throw std::invalid_argument("elbo_loss: empty batch");
  const Eigen::Index nb = static_cast<Eigen::Index>(batch.size());
  MatX<S> eps(p.d_z(), nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    for (int j = 0; j < p.d_z(); ++j) eps(j, b) = static_cast<S>(rng.normal());
  }

  // Same-length sequences are processed together; grouping only changes
  // floating-point summation order, not what is computed.
  std::map<std::size_t, std::vector<int>> by_len;
  for (Eigen::Index b = 0; b < nb; ++b) {
    by_len[batch[static_cast<std::size_t>(b)].tokens.size()].push_back(static_cast<int>(b));
  }

  const S inv_b = S(1) / static_cast<S>(nb);
  S loss = S(0);
  for (const auto& [w, idxs] : by_len) {
    const Eigen::Index ng = static_cast<Eigen::Index>(idxs.size());
    Eigen::MatrixXi toks(static_cast<Eigen::Index>(w), ng);
    std::vector<const SeqExample<S>*> group(idxs.size());
    MatX<S> eps_g(p.d_z(), ng);
    for (Eigen::Index b = 0; b < ng; ++b) {
      const SeqExample<S>& ex = batch[static_cast<std::size_t>(idxs[static_cast<std::size_t>(b)])];
      group[static_cast<std::size_t>(b)] = &ex;
      for (std::size_t t = 0; t < w; ++t) {
        toks(static_cast<Eigen::Index>(t), b) = ex.tokens[t];
      }
      eps_g.col(b) = eps.col(idxs[static_cast<std::size_t>(b)]);
    }
    auto gc = detail::make_group_context(p, group);

    EncodeCache<S> enc_cache;
    encode_group(toks, gc.c, p, enc_cache);
    const MatX<S> sd = (enc_cache.logvar.array() / S(2)).exp().matrix();
    const MatX<S> z = enc_cache.mu + sd.cwiseProduct(eps_g);
    DecodeCache<S> dec_cache;
    const VecX<S> loglik_raw = decode_group(toks, gc.c, z, p, dec_cache);

    const S inv_w = S(1) / static_cast<S>(w);
    for (Eigen::Index b = 0; b < ng; ++b) {
      const S recon = hp.length_normalize ? loglik_raw[b] * inv_w : loglik_raw[b];
      const S kl = S(0.5) * (enc_cache.logvar.col(b).array().exp() +
                             enc_cache.mu.col(b).array().square() - S(1) -
                             enc_cache.logvar.col(b).array())
                               .sum();
      loss += inv_b * (-recon + kl);
    }

    if (grad != nullptr) {
      VecX<S> d_loglik = VecX<S>::Constant(ng, -inv_b * (hp.length_normalize ? inv_w : S(1)));
      MatX<S> d_z_mat, d_c = MatX<S>::Zero(p.d_cond(), ng);
      decode_backward(toks, d_loglik, p, dec_cache, *grad, d_z_mat, d_c);
      // KL gradients plus the reparameterization path from d_z.
      MatX<S> d_mu = d_z_mat + inv_b * enc_cache.mu;
      MatX<S> d_logvar =
          (d_z_mat.array() * eps_g.array() * S(0.5) * sd.array() +
           inv_b * S(0.5) * (enc_cache.logvar.array().exp() - S(1)))
              .matrix();
      encode_backward(toks, d_mu, d_logvar, p, enc_cache, *grad, d_c);
      detail::group_context_backward(p, gc, d_c, *grad);
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Per-sequence operations (column batch of one, or of L Monte Carlo draws).
// ---------------------------------------------------------------------------

template <typename S>
Eigen::MatrixXi single_column(const std::vector<int>& tokens) {
  Eigen::MatrixXi toks(static_cast<Eigen::Index>(tokens.size()), 1);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    toks(static_cast<Eigen::Index>(t), 0) = tokens[t];
  }
  return toks;
}

template <typename S>
LatentPosterior<S> encode(const std::vector<int>& tokens, const ContextVector<S>& c,
                          const ModelParams<S>& p) {
  EncodeCache<S> cache;
  encode_group(single_column<S>(tokens), MatX<S>(c.vec), p, cache);
  return LatentPosterior<S>{cache.mu.col(0), cache.logvar.col(0)};
}

template <typename S>
S decode_loglik(const std::vector<int>& tokens, const ContextVector<S>& c, const VecX<S>& z,
                const ModelParams<S>& p, bool length_normalize) {
  DecodeCache<S> cache;
  const VecX<S> ll = decode_group(single_column<S>(tokens), MatX<S>(c.vec), MatX<S>(z), p, cache);
  return length_normalize ? ll[0] / static_cast<S>(tokens.size()) : ll[0];
}

/// Monte Carlo reconstruction estimate with the noise supplied
/// explicitly, one column of eps per draw. The draws decode as a single
/// column batch.
template <typename S>
S recon_loglik_given_eps(const std::vector<int>& tokens, const ContextVector<S>& c,
                         const ModelParams<S>& p, const MatX<S>& eps, bool length_normalize) {
  const int n_samples = static_cast<int>(eps.cols());
  if (n_samples < 1) throw std::invalid_argument("recon_loglik: L must be >= 1");
  const Eigen::MatrixXi toks1 = single_column<S>(tokens);
  EncodeCache<S> enc_cache;
  encode_group(toks1, MatX<S>(c.vec), p, enc_cache);
  const VecX<S> mu = enc_cache.mu.col(0);
  const VecX<S> sd = (enc_cache.logvar.col(0).array() / S(2)).exp().matrix();

  Eigen::MatrixXi toks(toks1.rows(), n_samples);
  MatX<S> cmat(p.d_cond(), n_samples);
  MatX<S> z(p.d_z(), n_samples);
  for (int l = 0; l < n_samples; ++l) {
    toks.col(l) = toks1.col(0);
    cmat.col(l) = c.vec;
    z.col(l) = mu + sd.cwiseProduct(eps.col(l));
  }
  DecodeCache<S> dec_cache;
  const VecX<S> ll = decode_group(toks, cmat, z, p, dec_cache);
  const S mean = ll.mean();
  return length_normalize ? mean / static_cast<S>(tokens.size()) : mean;
}

/// Monte Carlo reconstruction log-likelihood: the mean of decode_loglik
/// over L posterior draws from the injected generator.
template <typename S>
S recon_loglik_mc(const std::vector<int>& tokens, const ContextVector<S>& c,
                  const ModelParams<S>& p, int n_samples, Rng& rng, bool length_normalize) {
  if (n_samples < 1) throw std::invalid_argument("recon_loglik_mc: L must be >= 1");
  MatX<S> eps(p.d_z(), n_samples);
  for (int l = 0; l < n_samples; ++l) {
    for (int j = 0; j < p.d_z(); ++j) eps(j, l) = static_cast<S>(rng.normal());
  }
  return recon_loglik_given_eps(tokens, c, p, eps, length_normalize);
}

/// score = 1 - recon_loglik; higher means harder to reconstruct.
template <typename S>
ScoreRecord anomaly_score(std::int64_t subtraj_id, const std::string& agent_id,
                          const std::vector<int>& tokens, const ContextVector<S>& c,
                          const ModelParams<S>& p, int n_samples, Rng& rng,
                          bool length_normalize) {
  const double recon =
      static_cast<double>(recon_loglik_mc(tokens, c, p, n_samples, rng, length_normalize));
  return ScoreRecord{subtraj_id, agent_id, recon, 1.0 - recon};
}

}  // namespace trajscope
