#pragma once

#include <map>
#include <string>
#include <vector>

#include "ocsad/attack.hpp"

namespace ocsad {

struct BenignPerformance {
  double precision = 0.0;  // percent; abnormal is the positive class
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some denominator was zero
};

BenignPerformance benign_performance(const OneClassModel& model,
                                     const SequenceDataset& benign_test,
                                     double tau);

// Percentage of poisoned sequences the model classifies as normal.
double attack_success_rate(const OneClassModel& model,
                           const SequenceDataset& poisoned_set, double tau);

struct EvalReport {
  BenignPerformance bp;
  std::map<int, double> asr_by_m;
  double tau = 0.0;
  std::string model_variant;
};

enum class SweepAxis { alpha, beta, m };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepRow {
  double value = 0.0;
  BenignPerformance bp;
  double asr = 0.0;
  TrainConfig config;
};

// Everything a sweep needs to retrain and re-evaluate.
struct CorpusBundle {
  SequenceDataset train;        // full benign training split
  SequenceDataset x_c;          // train minus the base set
  PerturbedDataset perturbed;   // X_p with pairing
  PerturbationPlan plan;
  SequenceDataset val;
  SequenceDataset benign_test;
  uint64_t poison_seed = 0;
};

enum class TrainMode { benign, infected };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

// alpha/beta axes retrain one infected model per value (shared seed); the m
// axis trains once per the configured mode and re-crafts poisoned sets.
std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values,
                            const TrainConfig& base_cfg,
                            const CorpusBundle& bundle,
                            TrainMode mode = TrainMode::infected);

enum class Projection { none, top2_linear };

std::string to_string(Projection p);
Projection projection_from_string(const std::string& s);

// One CSV record per sequence: kind, origin tag, optional 2-component
// principal projection, full representation. The centers c and c_p are
// flagged rows.
void export_embeddings(const OneClassModel& model,
                       const std::vector<const SequenceDataset*>& datasets,
                       Projection projection, const std::string& out_path);

}  // namespace ocsad
