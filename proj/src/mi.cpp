#include "ocsad/mi.hpp"

#include <cmath>

namespace ocsad {

void DiscriminatorParams::check_finite() const {
  for (const auto& w : weights) {
    require(w.allFinite(), ErrorKind::numeric, "discriminator weights "
                                               "non-finite");
  }
  for (const auto& b : biases) {
    require(b.allFinite(), ErrorKind::numeric, "discriminator biases "
                                               "non-finite");
  }
}

double DiscriminatorParams::weight_squared_norm() const {
  double sum = 0.0;
  for (const auto& w : weights) sum += w.squaredNorm();
  return sum;
}

DiscGrad DiscGrad::zeros(const DiscriminatorParams& params) {
  DiscGrad g;
  for (const auto& w : params.weights) {
    g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases) {
    g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  }
  return g;
}

DiscriminatorParams init_discriminator(int rep_dim,
                                       const std::vector<int>& hidden,
                                       uint64_t seed, CriticInput input) {
  require(rep_dim >= 1, ErrorKind::config, "rep_dim must be positive");
  DiscriminatorParams p;
  p.input = input;
  p.rep_dim = rep_dim;
  std::vector<int> widths;
  widths.push_back(p.input_dim());
  for (int h : hidden) {
    require(h >= 1, ErrorKind::config, "hidden widths must be positive");
    widths.push_back(h);
  }
  widths.push_back(1);

  Rng rng = substream(seed, 31);
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    Eigen::MatrixXd w(widths[l + 1], widths[l]);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    Eigen::VectorXd b(widths[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b[i] = rng.uniform(-bound, bound);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Eigen::VectorXd pair_difference(const Representation& r_benign,
                                const Representation& r_perturbed) {
  require(r_benign.size() == r_perturbed.size(), ErrorKind::shape,
          "pair_difference: dimension mismatch");
  return (r_benign - r_perturbed).array().square();
}

CriticTape critic_forward(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const DiscriminatorParams& omega) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::shape,
          "critic_forward: pair shape mismatch");
  require(a.rows() == omega.rep_dim, ErrorKind::shape,
          "critic_forward: representation width mismatch");

  CriticTape tape;
  Eigen::MatrixXd input;
  if (omega.input == CriticInput::squared_diff) {
    tape.diff = a - b;
    input = tape.diff.array().square();
  } else {
    input.resize(2 * a.rows(), a.cols());
    input.topRows(a.rows()) = a;
    input.bottomRows(a.rows()) = b;
  }
  tape.acts.push_back(std::move(input));

  const size_t layers = omega.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = omega.weights[l] * tape.acts.back();
    z.colwise() += omega.biases[l];
    if (l + 1 < layers) z = z.cwiseMax(0.0);  // rectifier hidden layers
    tape.acts.push_back(std::move(z));
  }
  tape.out = tape.acts.back().row(0);
  return tape;
}

Eigen::RowVectorXd critic_values(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& b,
                                 const DiscriminatorParams& omega) {
  return critic_forward(a, b, omega).out;
}

void critic_backward(const CriticTape& tape, const DiscriminatorParams& omega,
                     const Eigen::RowVectorXd& d_out, double scale,
                     Eigen::MatrixXd& d_a, Eigen::MatrixXd& d_b,
                     DiscGrad& d_omega) {
  const size_t layers = omega.weights.size();
  Eigen::MatrixXd delta = d_out;  // 1 x n
  for (size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      // ReLU mask of the stored post-activation.
      delta = delta.cwiseProduct(
          (tape.acts[l + 1].array() > 0.0).cast<double>().matrix());
    }
    d_omega.weights[l] += scale * (delta * tape.acts[l].transpose());
    d_omega.biases[l] += scale * delta.rowwise().sum();
    if (l > 0) {
      delta = omega.weights[l].transpose() * delta;
    } else {
      Eigen::MatrixXd d_input = omega.weights[0].transpose() * delta;
      if (omega.input == CriticInput::squared_diff) {
        Eigen::MatrixXd d_pair = d_input.cwiseProduct(2.0 * tape.diff);
        if (d_a.size()) d_a += scale * d_pair;
        if (d_b.size()) d_b -= scale * d_pair;
      } else {
        if (d_a.size()) d_a += scale * d_input.topRows(omega.rep_dim);
        if (d_b.size()) d_b += scale * d_input.bottomRows(omega.rep_dim);
      }
    }
  }
}

double discriminate(const Representation& r_benign,
                    const Representation& r_perturbed,
                    const DiscriminatorParams& omega) {
  return critic_values(r_benign, r_perturbed, omega)(0);
}

namespace {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stack_pairs(
    const std::vector<RepPair>& pairs) {
  require(!pairs.empty(), ErrorKind::size, "empty pair list");
  Eigen::MatrixXd a(pairs[0].first.size(), pairs.size());
  Eigen::MatrixXd b(pairs[0].second.size(), pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    a.col(i) = pairs[i].first;
    b.col(i) = pairs[i].second;
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

double jsd_mi_estimate(const std::vector<RepPair>& joint_pairs,
                       const std::vector<RepPair>& marginal_pairs,
                       const DiscriminatorParams& omega) {
  auto [ja, jb] = stack_pairs(joint_pairs);
  auto [ma, mb] = stack_pairs(marginal_pairs);
  Eigen::RowVectorXd mj = critic_values(ja, jb, omega);
  Eigen::RowVectorXd mm = critic_values(ma, mb, omega);
  double joint_term = 0.0;
  for (Eigen::Index i = 0; i < mj.size(); ++i) joint_term -= softplus(-mj[i]);
  joint_term /= static_cast<double>(mj.size());
  double marginal_term = 0.0;
  for (Eigen::Index i = 0; i < mm.size(); ++i) {
    marginal_term += softplus(mm[i]);
  }
  marginal_term /= static_cast<double>(mm.size());
  return joint_term - marginal_term;
}

double dv_mi_estimate(const std::vector<RepPair>& joint_pairs,
                      const std::vector<RepPair>& marginal_pairs,
                      const DiscriminatorParams& omega) {
  auto [ja, jb] = stack_pairs(joint_pairs);
  auto [ma, mb] = stack_pairs(marginal_pairs);
  Eigen::RowVectorXd mj = critic_values(ja, jb, omega);
  Eigen::RowVectorXd mm = critic_values(ma, mb, omega);
  double joint_term = mj.mean();
  // log(mean e^M) = max + log(mean e^(M - max))
  double mmax = mm.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mm.size(); ++i) acc += std::exp(mm[i] - mmax);
  double log_mean_exp =
      mmax + std::log(acc / static_cast<double>(mm.size()));
  return joint_term - log_mean_exp;
}

int marginal_shift_offset(size_t n_pairs, uint64_t seed) {
  require(n_pairs >= 2, ErrorKind::size,
          "need at least 2 pairs for marginal sampling");
  Rng rng = substream(seed, 32);
  return 1 + rng.index(n_pairs - 1);
}

std::vector<RepPair> sample_marginal_pairs(const std::vector<RepPair>& pairs,
                                           uint64_t seed) {
  int offset = marginal_shift_offset(pairs.size(), seed);
  std::vector<RepPair> out;
  out.reserve(pairs.size());
  const size_t n = pairs.size();
  for (size_t i = 0; i < n; ++i) {
    out.emplace_back(pairs[(i + offset) % n].first, pairs[i].second);
  }
  return out;
}

namespace {

double jsd_core(const Eigen::MatrixXd& benign_reps,
                const Eigen::MatrixXd& perturbed_reps, int offset,
                const DiscriminatorParams& omega, double scale,
                Eigen::MatrixXd* d_benign, Eigen::MatrixXd* d_perturbed,
                DiscGrad* d_omega) {
  const int n = static_cast<int>(benign_reps.cols());
  require(n >= 2, ErrorKind::size, "need at least 2 pairs");
  require(offset >= 1 && offset < n, ErrorKind::usage,
          "shift offset must be in [1, n)");

  Eigen::MatrixXd shifted(benign_reps.rows(), n);
  for (int i = 0; i < n; ++i) {
    shifted.col(i) = benign_reps.col((i + offset) % n);
  }

  CriticTape joint = critic_forward(benign_reps, perturbed_reps, omega);
  CriticTape marg = critic_forward(shifted, perturbed_reps, omega);

  double value = 0.0;
  Eigen::RowVectorXd d_mj(n), d_mm(n);
  for (int i = 0; i < n; ++i) {
    value -= softplus(-joint.out[i]);
    value -= softplus(marg.out[i]);
    d_mj[i] = sigmoid(-joint.out[i]) / n;
    d_mm[i] = -sigmoid(marg.out[i]) / n;
  }
  value /= n;

  if (d_omega) {
    critic_backward(joint, omega, d_mj, scale, *d_benign, *d_perturbed,
                    *d_omega);
    Eigen::MatrixXd d_shifted =
        Eigen::MatrixXd::Zero(benign_reps.rows(), n);
    critic_backward(marg, omega, d_mm, scale, d_shifted, *d_perturbed,
                    *d_omega);
    if (d_benign->size()) {
      for (int i = 0; i < n; ++i) {
        d_benign->col((i + offset) % n) += d_shifted.col(i);
      }
    }
  }
  return value;
}

}  // namespace

double accumulate_jsd_gradients(const Eigen::MatrixXd& benign_reps,
                                const Eigen::MatrixXd& perturbed_reps,
                                int offset, const DiscriminatorParams& omega,
                                double scale, Eigen::MatrixXd& d_benign,
                                Eigen::MatrixXd& d_perturbed,
                                DiscGrad& d_omega) {
  return jsd_core(benign_reps, perturbed_reps, offset, omega, scale,
                  &d_benign, &d_perturbed, &d_omega);
}

double jsd_estimate_batch(const Eigen::MatrixXd& benign_reps,
                          const Eigen::MatrixXd& perturbed_reps, int offset,
                          const DiscriminatorParams& omega) {
  return jsd_core(benign_reps, perturbed_reps, offset, omega, 0.0, nullptr,
                  nullptr, nullptr);
}

}  // namespace ocsad
