#pragma once

#include <optional>
#include <vector>

#include "ocsad/encoder.hpp"

namespace ocsad {

enum class ModelVariant { svdd, oc4seq };

std::string to_string(ModelVariant v);
ModelVariant variant_from_string(const std::string& s);

struct Hypersphere {
  Eigen::VectorXd center;
  std::optional<double> threshold;  // tau, squared-distance units
  double weight_decay = 1e-4;      // lambda
};

// Trained detector: global encoder + hypersphere, plus local counterparts
// and the window spec for the oc4seq variant.
struct OneClassModel {
  ModelVariant variant = ModelVariant::svdd;
  EncoderParams global_encoder;
  Hypersphere global_sphere;

  // oc4seq only
  EncoderParams local_encoder;
  Hypersphere local_sphere;
  WindowSpec window;
  double eta = 1.0;
};

// Componentwise mean of the representations.
Eigen::VectorXd compute_center(const std::vector<Representation>& reps);
Eigen::VectorXd compute_center(const Eigen::MatrixXd& reps);  // columns

// (1/N) sum ||f(x_n) - c||^2 + lambda * ||theta||_F^2. The decay term covers
// all weight matrices, embedding included, biases excluded.
double svdd_loss(const std::vector<Sequence>& batch, const Eigen::VectorXd& c,
                 const EncoderParams& params, double lambda);

// (1/N) sum_n sum_s ||f_l(x_n^s) - c_l||^2 + lambda * ||theta_l||_F^2.
double local_loss(const std::vector<Sequence>& batch,
                  const Eigen::VectorXd& c_l, const EncoderParams& params,
                  double lambda, const WindowSpec& window);

// svdd_loss + eta * local_loss (both levels of the oc4seq objective).
double oc4seq_loss(const std::vector<Sequence>& batch,
                   const OneClassModel& model, double lambda);

// Squared distance to the center; oc4seq adds eta times the mean squared
// window distance.
double anomaly_score(const Sequence& x, const OneClassModel& model);
std::vector<double> anomaly_scores(const std::vector<Sequence>& xs,
                                   const OneClassModel& model);

enum class ThresholdStrategy { max_f1, quantile };

// max_f1 scans all midpoints between adjacent sorted scores and returns the
// threshold maximising F1 (ties -> smallest); quantile returns the q-th
// empirical quantile of the normal scores.
double fit_threshold(const std::vector<double>& val_scores,
                     const std::vector<Label>& val_labels,
                     ThresholdStrategy strategy, double q = 0.99);

// Abnormal iff anomaly_score(x) > tau (score == tau counts as normal).
Label classify(const Sequence& x, const OneClassModel& model);
Label classify_score(double score, double tau);

}  // namespace ocsad
