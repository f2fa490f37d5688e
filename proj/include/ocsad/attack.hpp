#pragma once

#include <cstdint>
#include <vector>

#include "ocsad/mi.hpp"
#include "ocsad/oneclass.hpp"
#include "ocsad/trigger.hpp"

namespace ocsad {

struct TrainConfig {
  ModelVariant variant = ModelVariant::svdd;
  double alpha = 0.5;
  double beta = 0.5;
  double eta = 1.0;
  double lambda = 1e-4;
  int epochs = 20;
  int batch_size = 128;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  WindowSpec window{8, 4};
  EncoderConfig encoder;  // vocab_size is filled from the data
  std::vector<int> disc_hidden = {64, 64};
  ThresholdStrategy threshold_strategy = ThresholdStrategy::quantile;
  double threshold_q = 0.99;

  void validate() const;
};

// Loss components of one optimisation step; local fields stay zero for the
// svdd variant, drifting fields stay zero for benign training.
struct StepBreakdown {
  double l_svdd = 0.0;
  double l_local = 0.0;
  double l_c = 0.0;
  double l_r = 0.0;
  double l_c_local = 0.0;
  double l_r_local = 0.0;
  double objective = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  StepBreakdown mean;     // averaged over the epoch's steps
  double c_drift = 0.0;   // ||c_p - c|| over all of X_p at epoch end
  double c_drift_local = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<StepBreakdown> steps;
};

// ||mean(perturbed representations) - c||_2 (plain Euclidean norm).
double center_drift_loss(const Eigen::MatrixXd& perturbed_reps,
                         const Eigen::VectorXd& c);

// Eq.-6 estimator over the pair batch with in-batch negatives; <= 0.
double repr_drift_loss(const std::vector<PerturbedPair>& pairs,
                       const EncoderParams& theta,
                       const DiscriminatorParams& omega, uint64_t seed);

struct InfectedBreakdown {
  double l_svdd = 0.0;
  double l_local = 0.0;
  double l_c = 0.0;
  double l_r = 0.0;
  double l_c_local = 0.0;
  double l_r_local = 0.0;
  double total = 0.0;
};

// L_SVDD(benign + variants) + alpha * L_c - beta * L_r.
InfectedBreakdown infected_svdd_objective(
    const std::vector<Sequence>& benign_batch,
    const std::vector<PerturbedPair>& pairs, const Eigen::VectorXd& c,
    const EncoderParams& theta, const DiscriminatorParams& omega,
    const TrainConfig& cfg, uint64_t seed);

// Adds the local level: eta * (L_local + alpha * L_cl - beta * L_rl).
InfectedBreakdown infected_oc4seq_objective(
    const std::vector<Sequence>& benign_batch,
    const std::vector<PerturbedPair>& pairs, const OneClassModel& model,
    const DiscriminatorParams& omega_global,
    const DiscriminatorParams& omega_local, const TrainConfig& cfg,
    uint64_t seed);

struct BenignTrainResult {
  OneClassModel model;
  TrainReport report;
};

// Baseline training: centers frozen from a forward pass of the initialised
// encoder over the training split, then gradient steps on the one-class
// objective. Threshold fitting is the caller's job.
BenignTrainResult train_benign(const SequenceDataset& train,
                               const TrainConfig& cfg);

struct InfectedTrainResult {
  OneClassModel model;
  TrainReport report;
  DiscriminatorParams omega;
  DiscriminatorParams omega_local;  // oc4seq only
};

// Backdoor injection: joint minimisation of the infected objective over the
// encoder(s) and discriminator(s). Each step mixes a benign mini-batch from
// X_c with paired perturbed sequences from X_p at the corpus ratio.
InfectedTrainResult train_infected(const SequenceDataset& x_c,
                                   const PerturbedDataset& perturbed,
                                   const TrainConfig& cfg);

}  // namespace ocsad
