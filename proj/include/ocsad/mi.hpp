#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ocsad/encoder.hpp"

namespace ocsad {

// How the critic consumes a representation pair. squared_diff is the
// elementwise (a-b)^2 composition used by the drifting loss; concat feeds
// [a; b] directly and exists for the DV cross-check on joint samples.
enum class CriticInput { squared_diff, concat };

// Fully connected network mapping the pair features to a scalar, rectifier
// hidden layers, linear output.
struct DiscriminatorParams {
  CriticInput input = CriticInput::squared_diff;
  int rep_dim = 0;
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const {
    return input == CriticInput::squared_diff ? rep_dim : 2 * rep_dim;
  }
  void check_finite() const;
  double weight_squared_norm() const;
};

struct DiscGrad {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static DiscGrad zeros(const DiscriminatorParams& params);
};

DiscriminatorParams init_discriminator(
    int rep_dim, const std::vector<int>& hidden, uint64_t seed,
    CriticInput input = CriticInput::squared_diff);

// Componentwise (a_i - b_i)^2; symmetric in its arguments.
Eigen::VectorXd pair_difference(const Representation& r_benign,
                                const Representation& r_perturbed);

// C_omega applied to the pair features of a single pair.
double discriminate(const Representation& r_benign,
                    const Representation& r_perturbed,
                    const DiscriminatorParams& omega);

// Batched critic over column-aligned pairs.
struct CriticTape {
  Eigen::MatrixXd diff;                 // a - b (squared_diff mode)
  std::vector<Eigen::MatrixXd> acts;    // input + post-activation per layer
  Eigen::RowVectorXd out;
};

CriticTape critic_forward(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const DiscriminatorParams& omega);
Eigen::RowVectorXd critic_values(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& b,
                                 const DiscriminatorParams& omega);

// Adds scale * d(sum_i d_out_i * M_i)/d{a, b, omega} into the accumulators.
void critic_backward(const CriticTape& tape, const DiscriminatorParams& omega,
                     const Eigen::RowVectorXd& d_out, double scale,
                     Eigen::MatrixXd& d_a, Eigen::MatrixXd& d_b,
                     DiscGrad& d_omega);

using RepPair = std::pair<Representation, Representation>;

// Jensen-Shannon estimator: mean over joint pairs of -sp(-M) minus mean over
// marginal pairs of sp(M). Always <= 0.
double jsd_mi_estimate(const std::vector<RepPair>& joint_pairs,
                       const std::vector<RepPair>& marginal_pairs,
                       const DiscriminatorParams& omega);

// Donsker-Varadhan lower bound: mean_J[M] - log(mean_M[e^M]), log-sum-exp
// stabilised.
double dv_mi_estimate(const std::vector<RepPair>& joint_pairs,
                      const std::vector<RepPair>& marginal_pairs,
                      const DiscriminatorParams& omega);

// Negative sampling offset for in-batch marginals: cyclic shift in [1, n-1].
int marginal_shift_offset(size_t n_pairs, uint64_t seed);

// Marginal pairs (r_x', r_xp) where x' is the benign side of a different
// pair, via the seeded cyclic shift. No pair keeps its original partner.
std::vector<RepPair> sample_marginal_pairs(const std::vector<RepPair>& pairs,
                                           uint64_t seed);

// Batched JSD over column-aligned pairs with in-batch negatives at the given
// shift offset. Adds scale times the gradients into the accumulators and
// returns the estimate. Accumulators may be empty matrices to skip a side.
double accumulate_jsd_gradients(const Eigen::MatrixXd& benign_reps,
                                const Eigen::MatrixXd& perturbed_reps,
                                int offset, const DiscriminatorParams& omega,
                                double scale, Eigen::MatrixXd& d_benign,
                                Eigen::MatrixXd& d_perturbed,
                                DiscGrad& d_omega);

double jsd_estimate_batch(const Eigen::MatrixXd& benign_reps,
                          const Eigen::MatrixXd& perturbed_reps, int offset,
                          const DiscriminatorParams& omega);

}  // namespace ocsad
