#include "ocsad/evalkit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>

namespace ocsad {

BenignPerformance benign_performance(const OneClassModel& model,
                                     const SequenceDataset& benign_test,
                                     double tau) {
  bool has_normal = false, has_abnormal = false;
  for (const Sequence& s : benign_test.sequences) {
    has_normal |= s.label == Label::normal;
    has_abnormal |= s.label == Label::abnormal;
  }
  require(has_normal && has_abnormal, ErrorKind::usage,
          "benign_performance needs both labels in the test set");

  std::vector<double> scores = anomaly_scores(benign_test.sequences, model);
  int tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    bool predicted_abnormal =
        classify_score(scores[i], tau) == Label::abnormal;
    bool is_abnormal = benign_test.sequences[i].label == Label::abnormal;
    if (predicted_abnormal && is_abnormal) ++tp;
    if (predicted_abnormal && !is_abnormal) ++fp;
    if (!predicted_abnormal && is_abnormal) ++fn;
  }

  BenignPerformance bp;
  if (tp + fp == 0) {
    bp.degenerate = true;
  } else {
    bp.precision = 100.0 * tp / (tp + fp);
  }
  if (tp + fn == 0) {
    bp.degenerate = true;
  } else {
    bp.recall = 100.0 * tp / (tp + fn);
  }
  if (bp.precision + bp.recall == 0.0) {
    bp.degenerate = true;
  } else {
    bp.f1 = 2.0 * bp.precision * bp.recall / (bp.precision + bp.recall);
  }
  return bp;
}

double attack_success_rate(const OneClassModel& model,
                           const SequenceDataset& poisoned_set, double tau) {
  require(!poisoned_set.sequences.empty(), ErrorKind::size,
          "attack_success_rate on empty poisoned set");
  for (const Sequence& s : poisoned_set.sequences) {
    require(s.label == Label::abnormal, ErrorKind::usage,
            "poisoned set must be all abnormal");
  }
  std::vector<double> scores = anomaly_scores(poisoned_set.sequences, model);
  size_t evaded = 0;
  for (double s : scores) {
    if (classify_score(s, tau) == Label::normal) ++evaded;
  }
  return 100.0 * static_cast<double>(evaded) /
         static_cast<double>(scores.size());
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::beta: return "beta";
    default: return "m";
  }
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "alpha") return SweepAxis::alpha;
  if (s == "beta") return SweepAxis::beta;
  if (s == "m") return SweepAxis::m;
  fail(ErrorKind::config, "unknown sweep axis '" + s + "'");
}

std::string to_string(TrainMode m) {
  return m == TrainMode::benign ? "benign" : "infected";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "benign") return TrainMode::benign;
  if (s == "infected") return TrainMode::infected;
  fail(ErrorKind::config, "unknown train mode '" + s + "'");
}

namespace {

OneClassModel train_for_sweep(const TrainConfig& cfg,
                              const CorpusBundle& bundle, TrainMode mode,
                              double* tau_out) {
  OneClassModel model;
  if (mode == TrainMode::benign) {
    model = train_benign(bundle.train, cfg).model;
  } else {
    model = train_infected(bundle.x_c, bundle.perturbed, cfg).model;
  }
  std::vector<double> val_scores = anomaly_scores(bundle.val.sequences, model);
  std::vector<Label> val_labels;
  for (const Sequence& s : bundle.val.sequences) val_labels.push_back(s.label);
  *tau_out = fit_threshold(val_scores, val_labels, cfg.threshold_strategy,
                           cfg.threshold_q);
  return model;
}

}  // namespace

std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values,
                            const TrainConfig& base_cfg,
                            const CorpusBundle& bundle, TrainMode mode) {
  require(!values.empty(), ErrorKind::config, "sweep needs at least one "
                                              "value");
  std::vector<SweepRow> rows;

  if (axis == SweepAxis::m) {
    for (double v : values) {
      require(v >= 1.0 && v <= bundle.plan.m() && v == std::floor(v),
              ErrorKind::bounds, "m values must be integers in [1, plan.m]");
    }
    // One model, re-crafted poisoned sets.
    double tau = 0.0;
    OneClassModel model = train_for_sweep(base_cfg, bundle, mode, &tau);
    BenignPerformance bp = benign_performance(model, bundle.benign_test, tau);
    for (double v : values) {
      SweepRow row;
      row.value = v;
      row.config = base_cfg;
      row.bp = bp;
      SequenceDataset poisoned = poison_dataset(
          bundle.perturbed.x_p, bundle.plan, bundle.x_c.vocab.abnormal_ids,
          static_cast<int>(v), bundle.poison_seed);
      row.asr = attack_success_rate(model, poisoned, tau);
      rows.push_back(std::move(row));
    }
    return rows;
  }

  for (double v : values) {
    TrainConfig cfg = base_cfg;
    if (axis == SweepAxis::alpha) {
      cfg.alpha = v;
    } else {
      cfg.beta = v;
    }
    SweepRow row;
    row.value = v;
    row.config = cfg;
    double tau = 0.0;
    OneClassModel model = train_for_sweep(cfg, bundle, TrainMode::infected,
                                          &tau);
    row.bp = benign_performance(model, bundle.benign_test, tau);
    SequenceDataset poisoned = poison_dataset(
        bundle.perturbed.x_p, bundle.plan, bundle.x_c.vocab.abnormal_ids,
        bundle.plan.m(), bundle.poison_seed);
    row.asr = attack_success_rate(model, poisoned, tau);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_string(Projection p) {
  return p == Projection::none ? "none" : "top2-linear";
}

Projection projection_from_string(const std::string& s) {
  if (s == "none") return Projection::none;
  if (s == "top2-linear" || s == "top2") return Projection::top2_linear;
  fail(ErrorKind::config, "unknown projection '" + s + "'");
}

void export_embeddings(const OneClassModel& model,
                       const std::vector<const SequenceDataset*>& datasets,
                       Projection projection, const std::string& out_path) {
  require(model.global_sphere.center.size() > 0, ErrorKind::state,
          "model not trained");
  const int dh = model.global_encoder.cfg.hidden_dim;

  std::vector<std::string> origins;
  std::vector<Eigen::VectorXd> reps;
  for (const SequenceDataset* ds : datasets) {
    for (size_t start = 0; start < ds->size(); start += 1024) {
      size_t stop = std::min(ds->size(), start + 1024);
      std::vector<Sequence> chunk(ds->sequences.begin() + start,
                                  ds->sequences.begin() + stop);
      Eigen::MatrixXd h =
          encode_batch(chunk, model.global_encoder).final_hidden;
      for (Eigen::Index j = 0; j < h.cols(); ++j) {
        reps.push_back(h.col(j));
        origins.push_back(to_string(chunk[j].origin));
      }
    }
  }
  const size_t n_seq = reps.size();

  std::vector<std::string> kinds(n_seq, "sequence");
  Eigen::VectorXd c_p = Eigen::VectorXd::Zero(dh);
  size_t n_perturbed = 0;
  for (size_t i = 0; i < n_seq; ++i) {
    if (origins[i] == "perturbed") {
      c_p += reps[i];
      ++n_perturbed;
    }
  }
  reps.push_back(model.global_sphere.center);
  origins.push_back("center");
  kinds.push_back("center");
  if (n_perturbed > 0) {
    reps.push_back(c_p / static_cast<double>(n_perturbed));
    origins.push_back("center_p");
    kinds.push_back("center_p");
  }

  Eigen::MatrixXd proj;
  if (projection == Projection::top2_linear) {
    require(dh >= 2, ErrorKind::config,
            "top2 projection needs hidden_dim >= 2");
    require(n_seq >= 2, ErrorKind::size,
            "top2 projection needs at least 2 sequences");
    // Principal directions of the pooled sequence representations.
    Eigen::MatrixXd pooled(dh, n_seq);
    for (size_t i = 0; i < n_seq; ++i) pooled.col(i) = reps[i];
    Eigen::VectorXd mean = pooled.rowwise().mean();
    pooled.colwise() -= mean;
    Eigen::MatrixXd cov =
        pooled * pooled.transpose() / static_cast<double>(n_seq - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    // Eigenvalues ascend; top two columns are the principal directions.
    Eigen::MatrixXd dirs(dh, 2);
    dirs.col(0) = es.eigenvectors().col(dh - 1);
    dirs.col(1) = es.eigenvectors().col(dh - 2);
    for (int j = 0; j < 2; ++j) {
      Eigen::Index imax;
      dirs.col(j).cwiseAbs().maxCoeff(&imax);
      if (dirs(imax, j) < 0) dirs.col(j) = -dirs.col(j);
    }
    proj.resize(2, reps.size());
    for (size_t i = 0; i < reps.size(); ++i) {
      proj.col(i) = dirs.transpose() * (reps[i] - mean);
    }
  }

  std::ofstream out(out_path);
  require(out.good(), ErrorKind::io, "cannot write " + out_path);
  out.precision(17);
  out << "kind,origin";
  if (projection == Projection::top2_linear) out << ",proj1,proj2";
  for (int d = 0; d < dh; ++d) out << ",r" << d;
  out << '\n';
  for (size_t i = 0; i < reps.size(); ++i) {
    out << kinds[i] << ',' << origins[i];
    if (projection == Projection::top2_linear) {
      out << ',' << proj(0, i) << ',' << proj(1, i);
    }
    for (int d = 0; d < dh; ++d) out << ',' << reps[i][d];
    out << '\n';
  }
}

}  // namespace ocsad
