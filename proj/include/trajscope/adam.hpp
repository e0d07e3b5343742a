#pragma once

#include <cmath>
#include <vector>

#include "trajscope/cvae.hpp"

namespace trajscope {

/// Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8). Moment
/// buffers follow the for_each_tensor order, so updates are deterministic.
template <typename S>
class Adam {
 public:
  Adam(const ModelParams<S>& shape, S lr) : lr_(lr) {
    for_each_tensor(shape, [&](const char*, const auto& t) {
      m_.push_back(MatX<S>::Zero(t.rows(), t.cols()));
      v_.push_back(MatX<S>::Zero(t.rows(), t.cols()));
    });
  }

  void step(ModelParams<S>& params, const ModelParams<S>& grads) {
    ++t_;
    const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1_), t_));
    const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2_), t_));
    std::size_t i = 0;
    for_each_tensor_pair(params, grads, [&](const char*, auto& p, const auto& g) {
      auto& m = m_[i];
      auto& v = v_[i];
      m = beta1_ * m + (S(1) - beta1_) * g;
      v = (beta2_ * v.array() + (S(1) - beta2_) * g.array().square()).matrix();
      p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
      ++i;
    });
  }

 private:
  S lr_;
  S beta1_ = S(0.9);
  S beta2_ = S(0.999);
  S eps_ = S(1e-8);
  int t_ = 0;
  std::vector<MatX<S>> m_, v_;
};

}  // namespace trajscope
