#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ocsad/common.hpp"

namespace ocsad {

// Flat view over a parameter or gradient tensor.
struct ParamView {
  double* data = nullptr;
  size_t size = 0;
};

inline ParamView view(Eigen::MatrixXd& m) {
  return {m.data(), static_cast<size_t>(m.size())};
}
inline ParamView view(Eigen::VectorXd& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

// Adaptive moment estimation over an ordered list of tensors. The tensor
// list must be identical (shapes and order) on every step.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamView>& params,
            const std::vector<ParamView>& grads) {
    require(params.size() == grads.size(), ErrorKind::usage,
            "Adam: parameter/gradient count mismatch");
    if (m_.empty()) {
      for (const ParamView& p : params) {
        m_.emplace_back(Eigen::ArrayXd::Zero(p.size));
        v_.emplace_back(Eigen::ArrayXd::Zero(p.size));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      require(params[i].size == grads[i].size &&
                  params[i].size == static_cast<size_t>(m_[i].size()),
              ErrorKind::usage, "Adam: tensor size changed between steps");
      Eigen::Map<Eigen::ArrayXd> p(params[i].data, params[i].size);
      Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.square();
      p -= lr_ * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Eigen::ArrayXd> m_, v_;
};

}  // namespace ocsad
