#include "ocsad/oneclass.hpp"

#include <algorithm>
#include <cmath>

namespace ocsad {

std::string to_string(ModelVariant v) {
  return v == ModelVariant::svdd ? "svdd" : "oc4seq";
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "svdd") return ModelVariant::svdd;
  if (s == "oc4seq") return ModelVariant::oc4seq;
  fail(ErrorKind::config, "unknown model variant '" + s + "'");
}

Eigen::VectorXd compute_center(const std::vector<Representation>& reps) {
  require(!reps.empty(), ErrorKind::size, "cannot average zero "
                                          "representations");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(reps[0].size());
  for (const Representation& r : reps) c += r;
  return c / static_cast<double>(reps.size());
}

Eigen::VectorXd compute_center(const Eigen::MatrixXd& reps) {
  require(reps.cols() > 0, ErrorKind::size, "cannot average zero "
                                            "representations");
  return reps.rowwise().mean();
}

double svdd_loss(const std::vector<Sequence>& batch, const Eigen::VectorXd& c,
                 const EncoderParams& params, double lambda) {
  require(!batch.empty(), ErrorKind::size, "svdd_loss on empty batch");
  EncoderTape tape = encode_batch(batch, params);
  double sum = (tape.final_hidden.colwise() - c).colwise().squaredNorm().sum();
  return sum / static_cast<double>(batch.size()) +
         lambda * params.weight_squared_norm();
}

double local_loss(const std::vector<Sequence>& batch,
                  const Eigen::VectorXd& c_l, const EncoderParams& params,
                  double lambda, const WindowSpec& window) {
  require(!batch.empty(), ErrorKind::size, "local_loss on empty batch");
  std::vector<const Sequence*> ptrs;
  ptrs.reserve(batch.size());
  for (const Sequence& s : batch) ptrs.push_back(&s);
  std::vector<Sequence> windows = window_batch(ptrs, window);
  EncoderTape tape = encode_batch(windows, params);
  double sum =
      (tape.final_hidden.colwise() - c_l).colwise().squaredNorm().sum();
  return sum / static_cast<double>(batch.size()) +
         lambda * params.weight_squared_norm();
}

double oc4seq_loss(const std::vector<Sequence>& batch,
                   const OneClassModel& model, double lambda) {
  require(model.variant == ModelVariant::oc4seq, ErrorKind::usage,
          "oc4seq_loss requires an oc4seq model");
  return svdd_loss(batch, model.global_sphere.center, model.global_encoder,
                   lambda) +
         model.eta * local_loss(batch, model.local_sphere.center,
                                model.local_encoder, lambda, model.window);
}

double anomaly_score(const Sequence& x, const OneClassModel& model) {
  std::vector<Sequence> one{x};
  return anomaly_scores(one, model)[0];
}

std::vector<double> anomaly_scores(const std::vector<Sequence>& xs,
                                   const OneClassModel& model) {
  require(model.global_sphere.center.size() > 0, ErrorKind::state,
          "model center not set");
  if (xs.empty()) return {};
  EncoderTape tape = encode_batch(xs, model.global_encoder);
  Eigen::VectorXd global =
      (tape.final_hidden.colwise() - model.global_sphere.center)
          .colwise()
          .squaredNorm();
  if (model.variant == ModelVariant::svdd) {
    return {global.data(), global.data() + global.size()};
  }

  require(model.local_sphere.center.size() > 0, ErrorKind::state,
          "local center not set");
  std::vector<const Sequence*> ptrs;
  ptrs.reserve(xs.size());
  for (const Sequence& s : xs) ptrs.push_back(&s);
  std::vector<Sequence> windows = window_batch(ptrs, model.window);
  EncoderTape ltape = encode_batch(windows, model.local_encoder);
  Eigen::VectorXd wdist =
      (ltape.final_hidden.colwise() - model.local_sphere.center)
          .colwise()
          .squaredNorm();

  const int n = static_cast<int>(xs.size());
  const int s_count = model.window.count(xs[0].length());
  std::vector<double> out(n);
  for (int j = 0; j < n; ++j) {
    double local_sum = 0.0;
    for (int s = 0; s < s_count; ++s) local_sum += wdist[s * n + j];
    out[j] = global[j] + model.eta * local_sum / s_count;
  }
  return out;
}

namespace {

double f1_at_threshold(const std::vector<double>& scores,
                       const std::vector<Label>& labels, double tau) {
  int tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    bool predicted_abnormal = scores[i] > tau;
    bool is_abnormal = labels[i] == Label::abnormal;
    if (predicted_abnormal && is_abnormal) ++tp;
    if (predicted_abnormal && !is_abnormal) ++fp;
    if (!predicted_abnormal && is_abnormal) ++fn;
  }
  if (tp == 0) return 0.0;
  double precision = static_cast<double>(tp) / (tp + fp);
  double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double fit_threshold(const std::vector<double>& val_scores,
                     const std::vector<Label>& val_labels,
                     ThresholdStrategy strategy, double q) {
  require(!val_scores.empty(), ErrorKind::size, "no validation scores");

  if (strategy == ThresholdStrategy::quantile) {
    require(q >= 0.0 && q <= 1.0, ErrorKind::config, "quantile must be in "
                                                     "[0,1]");
    std::vector<double> normals;
    for (size_t i = 0; i < val_scores.size(); ++i) {
      if (val_labels.empty() || val_labels[i] == Label::normal) {
        normals.push_back(val_scores[i]);
      }
    }
    require(!normals.empty(), ErrorKind::size, "no normal validation scores");
    std::sort(normals.begin(), normals.end());
    // Linear interpolation between order statistics; q=1 gives the max.
    double pos = q * static_cast<double>(normals.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, normals.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return normals[lo] * (1.0 - frac) + normals[hi] * frac;
  }

  require(val_labels.size() == val_scores.size(), ErrorKind::usage,
          "max_f1 needs one label per score");
  bool has_normal = false, has_abnormal = false;
  for (Label l : val_labels) {
    has_normal |= l == Label::normal;
    has_abnormal |= l == Label::abnormal;
  }
  require(has_normal && has_abnormal, ErrorKind::strategy,
          "max_f1 requires both labels present");

  std::vector<double> sorted = val_scores;
  std::sort(sorted.begin(), sorted.end());
  double best_tau = 0.0;
  double best_f1 = -1.0;
  for (size_t i = 0; i + 1 < sorted.size(); ++i) {
    double tau = 0.5 * (sorted[i] + sorted[i + 1]);
    double f1 = f1_at_threshold(val_scores, val_labels, tau);
    if (f1 > best_f1 || (f1 == best_f1 && tau < best_tau)) {
      best_f1 = f1;
      best_tau = tau;
    }
  }
  return best_tau;
}

Label classify_score(double score, double tau) {
  return score > tau ? Label::abnormal : Label::normal;
}

Label classify(const Sequence& x, const OneClassModel& model) {
  require(model.global_sphere.threshold.has_value(), ErrorKind::state,
          "threshold not fitted");
  return classify_score(anomaly_score(x, model),
                        *model.global_sphere.threshold);
}

}  // namespace ocsad
