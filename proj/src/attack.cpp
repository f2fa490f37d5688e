#include "ocsad/attack.hpp"

#include <algorithm>
#include <cmath>

#include "ocsad/optim.hpp"

namespace ocsad {

namespace {
constexpr double kNormGuard = 1e-12;
constexpr int kEncodeChunk = 1024;
}  // namespace

void TrainConfig::validate() const {
  require(alpha >= 0.0 && beta >= 0.0 && eta >= 0.0 && lambda >= 0.0,
          ErrorKind::config, "alpha/beta/eta/lambda must be >= 0");
  require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
  require(batch_size >= 2, ErrorKind::config,
          "batch_size must be >= 2 (marginal sampling needs 2 pairs)");
  require(learning_rate >= 0.0, ErrorKind::config,
          "learning_rate must be >= 0");
}

double center_drift_loss(const Eigen::MatrixXd& perturbed_reps,
                         const Eigen::VectorXd& c) {
  require(perturbed_reps.cols() > 0, ErrorKind::size,
          "center_drift_loss on empty batch");
  require(perturbed_reps.rows() == c.size(), ErrorKind::shape,
          "center/representation width mismatch");
  return (perturbed_reps.rowwise().mean() - c).norm();
}

double repr_drift_loss(const std::vector<PerturbedPair>& pairs,
                       const EncoderParams& theta,
                       const DiscriminatorParams& omega, uint64_t seed) {
  require(pairs.size() >= 2, ErrorKind::size,
          "repr_drift_loss needs at least 2 pairs");
  std::vector<const Sequence*> bases, variants;
  for (const PerturbedPair& p : pairs) {
    bases.push_back(&p.base);
    variants.push_back(&p.variant);
  }
  Eigen::MatrixXd rx = encode_batch(bases, theta).final_hidden;
  Eigen::MatrixXd rv = encode_batch(variants, theta).final_hidden;
  int offset = marginal_shift_offset(pairs.size(), seed);
  return jsd_estimate_batch(rx, rv, offset, omega);
}

namespace {

std::vector<const Sequence*> pointers(const std::vector<Sequence>& xs) {
  std::vector<const Sequence*> out;
  out.reserve(xs.size());
  for (const Sequence& x : xs) out.push_back(&x);
  return out;
}

Eigen::VectorXd mean_rep(const std::vector<const Sequence*>& xs,
                         const EncoderParams& params) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.cfg.hidden_dim);
  size_t count = 0;
  for (size_t start = 0; start < xs.size(); start += kEncodeChunk) {
    size_t stop = std::min(xs.size(), start + kEncodeChunk);
    std::vector<const Sequence*> chunk(xs.begin() + start, xs.begin() + stop);
    Eigen::MatrixXd reps = encode_batch(chunk, params).final_hidden;
    sum += reps.rowwise().sum();
    count += chunk.size();
  }
  require(count > 0, ErrorKind::size, "nothing to average");
  return sum / static_cast<double>(count);
}

Eigen::VectorXd mean_window_rep(const std::vector<const Sequence*>& xs,
                                const EncoderParams& params,
                                const WindowSpec& window) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.cfg.hidden_dim);
  size_t count = 0;
  for (size_t start = 0; start < xs.size(); start += kEncodeChunk) {
    size_t stop = std::min(xs.size(), start + kEncodeChunk);
    std::vector<const Sequence*> chunk(xs.begin() + start, xs.begin() + stop);
    std::vector<Sequence> windows = window_batch(chunk, window);
    Eigen::MatrixXd reps = encode_batch(windows, params).final_hidden;
    sum += reps.rowwise().sum();
    count += windows.size();
  }
  require(count > 0, ErrorKind::size, "nothing to average");
  return sum / static_cast<double>(count);
}

struct GlobalLevelOut {
  double l_svdd = 0.0;
  double l_c = 0.0;
  double l_r = 0.0;
};

// One step of the (possibly infected) global objective. Benign-only steps
// pass empty base/variant lists. Gradient outputs are optional and share the
// scaling of the objective: l_svdd + alpha*l_c - beta*l_r.
GlobalLevelOut global_level(const std::vector<const Sequence*>& benign,
                            const std::vector<const Sequence*>& bases,
                            const std::vector<const Sequence*>& variants,
                            const Eigen::VectorXd& c,
                            const EncoderParams& theta,
                            const DiscriminatorParams* omega, double alpha,
                            double beta, double lambda, int mi_offset,
                            EncoderGrad* d_theta, DiscGrad* d_omega) {
  GlobalLevelOut out;
  const int n_b = static_cast<int>(benign.size());
  const int n_v = static_cast<int>(variants.size());
  const int n_total = n_b + n_v;
  require(n_total > 0, ErrorKind::size, "empty step");

  EncoderTape tape_b, tape_v, tape_x;
  if (n_b > 0) tape_b = encode_batch(benign, theta);
  if (n_v > 0) {
    tape_v = encode_batch(variants, theta);
    tape_x = encode_batch(bases, theta);
  }

  double sq_sum = 0.0;
  if (n_b > 0) {
    sq_sum += (tape_b.final_hidden.colwise() - c).colwise().squaredNorm().sum();
  }
  if (n_v > 0) {
    sq_sum += (tape_v.final_hidden.colwise() - c).colwise().squaredNorm().sum();
  }
  out.l_svdd = sq_sum / n_total + lambda * theta.weight_squared_norm();

  Eigen::MatrixXd d_rb, d_rv, d_rx;
  if (d_theta) {
    if (n_b > 0) {
      d_rb = 2.0 / n_total * (tape_b.final_hidden.colwise() - c);
    }
    if (n_v > 0) {
      d_rv = 2.0 / n_total * (tape_v.final_hidden.colwise() - c);
      d_rx = Eigen::MatrixXd::Zero(tape_x.final_hidden.rows(), n_v);
    }
  }

  if (n_v > 0) {
    Eigen::VectorXd diff = tape_v.final_hidden.rowwise().mean() - c;
    double norm = diff.norm();
    out.l_c = norm;
    if (d_theta && alpha != 0.0 && norm > kNormGuard) {
      Eigen::VectorXd d_mean = alpha / norm * diff;
      d_rv.colwise() += (d_mean / n_v).eval();
    }

    require(omega != nullptr, ErrorKind::usage,
            "perturbed step needs a discriminator");
    if (d_theta && d_omega) {
      out.l_r = accumulate_jsd_gradients(tape_x.final_hidden,
                                         tape_v.final_hidden, mi_offset,
                                         *omega, -beta, d_rx, d_rv, *d_omega);
    } else {
      out.l_r = jsd_estimate_batch(tape_x.final_hidden, tape_v.final_hidden,
                                   mi_offset, *omega);
    }
  }

  if (d_theta) {
    if (n_b > 0) encoder_backward(tape_b, d_rb, *d_theta);
    if (n_v > 0) {
      encoder_backward(tape_v, d_rv, *d_theta);
      encoder_backward(tape_x, d_rx, *d_theta);
    }
    d_theta->add_weight_decay(theta, lambda);
  }
  return out;
}

struct LocalLevelOut {
  double l_local = 0.0;
  double l_c_local = 0.0;
  double l_r_local = 0.0;
};

// Local (subsequence) counterpart. Window batches are window-major, so the
// pairs at window index s occupy one contiguous column block.
LocalLevelOut local_level(const std::vector<const Sequence*>& benign,
                          const std::vector<const Sequence*>& bases,
                          const std::vector<const Sequence*>& variants,
                          const Eigen::VectorXd& c_l,
                          const EncoderParams& theta_l,
                          const DiscriminatorParams* omega_l,
                          const WindowSpec& window, double alpha, double beta,
                          double lambda, int mi_offset, EncoderGrad* d_theta,
                          DiscGrad* d_omega) {
  LocalLevelOut out;
  const int n_b = static_cast<int>(benign.size());
  const int n_v = static_cast<int>(variants.size());
  const int n_total = n_b + n_v;
  require(n_total > 0, ErrorKind::size, "empty step");

  EncoderTape tape_b, tape_v, tape_x;
  std::vector<Sequence> win_b, win_v, win_x;
  if (n_b > 0) {
    win_b = window_batch(benign, window);
    tape_b = encode_batch(win_b, theta_l);
  }
  if (n_v > 0) {
    win_v = window_batch(variants, window);
    win_x = window_batch(bases, window);
    tape_v = encode_batch(win_v, theta_l);
    tape_x = encode_batch(win_x, theta_l);
  }

  double sq_sum = 0.0;
  if (n_b > 0) {
    sq_sum +=
        (tape_b.final_hidden.colwise() - c_l).colwise().squaredNorm().sum();
  }
  if (n_v > 0) {
    sq_sum +=
        (tape_v.final_hidden.colwise() - c_l).colwise().squaredNorm().sum();
  }
  out.l_local = sq_sum / n_total + lambda * theta_l.weight_squared_norm();

  Eigen::MatrixXd d_rb, d_rv, d_rx;
  if (d_theta) {
    if (n_b > 0) {
      d_rb = 2.0 / n_total * (tape_b.final_hidden.colwise() - c_l);
    }
    if (n_v > 0) {
      d_rv = 2.0 / n_total * (tape_v.final_hidden.colwise() - c_l);
      d_rx = Eigen::MatrixXd::Zero(tape_x.final_hidden.rows(),
                                   tape_x.final_hidden.cols());
    }
  }

  if (n_v > 0) {
    const int windows_per_seq = static_cast<int>(win_v.size()) / n_v;
    Eigen::VectorXd diff = tape_v.final_hidden.rowwise().mean() - c_l;
    double norm = diff.norm();
    out.l_c_local = norm;
    if (d_theta && alpha != 0.0 && norm > kNormGuard) {
      Eigen::VectorXd d_mean =
          alpha / norm * diff / static_cast<double>(tape_v.final_hidden.cols());
      d_rv.colwise() += d_mean.eval();
    }

    require(omega_l != nullptr, ErrorKind::usage,
            "perturbed step needs a local discriminator");
    // One estimator per aligned window index, summed.
    for (int s = 0; s < windows_per_seq; ++s) {
      Eigen::MatrixXd rx_s = tape_x.final_hidden.middleCols(s * n_v, n_v);
      Eigen::MatrixXd rv_s = tape_v.final_hidden.middleCols(s * n_v, n_v);
      if (d_theta && d_omega) {
        Eigen::MatrixXd d_rx_s =
            Eigen::MatrixXd::Zero(rx_s.rows(), rx_s.cols());
        Eigen::MatrixXd d_rv_s =
            Eigen::MatrixXd::Zero(rv_s.rows(), rv_s.cols());
        out.l_r_local += accumulate_jsd_gradients(
            rx_s, rv_s, mi_offset, *omega_l, -beta, d_rx_s, d_rv_s, *d_omega);
        d_rx.middleCols(s * n_v, n_v) += d_rx_s;
        d_rv.middleCols(s * n_v, n_v) += d_rv_s;
      } else {
        out.l_r_local +=
            jsd_estimate_batch(rx_s, rv_s, mi_offset, *omega_l);
      }
    }
  }

  if (d_theta) {
    if (n_b > 0) encoder_backward(tape_b, d_rb, *d_theta);
    if (n_v > 0) {
      encoder_backward(tape_v, d_rv, *d_theta);
      encoder_backward(tape_x, d_rx, *d_theta);
    }
    d_theta->add_weight_decay(theta_l, lambda);
  }
  return out;
}

std::vector<const Sequence*> split_pairs_bases(
    const std::vector<PerturbedPair>& pairs) {
  std::vector<const Sequence*> out;
  out.reserve(pairs.size());
  for (const PerturbedPair& p : pairs) out.push_back(&p.base);
  return out;
}

std::vector<const Sequence*> split_pairs_variants(
    const std::vector<PerturbedPair>& pairs) {
  std::vector<const Sequence*> out;
  out.reserve(pairs.size());
  for (const PerturbedPair& p : pairs) out.push_back(&p.variant);
  return out;
}

}  // namespace

InfectedBreakdown infected_svdd_objective(
    const std::vector<Sequence>& benign_batch,
    const std::vector<PerturbedPair>& pairs, const Eigen::VectorXd& c,
    const EncoderParams& theta, const DiscriminatorParams& omega,
    const TrainConfig& cfg, uint64_t seed) {
  int offset = pairs.size() >= 2
                   ? marginal_shift_offset(pairs.size(), seed)
                   : 1;
  GlobalLevelOut g = global_level(
      pointers(benign_batch), split_pairs_bases(pairs),
      split_pairs_variants(pairs), c, theta, &omega, cfg.alpha, cfg.beta,
      cfg.lambda, offset, nullptr, nullptr);
  InfectedBreakdown out;
  out.l_svdd = g.l_svdd;
  out.l_c = g.l_c;
  out.l_r = g.l_r;
  out.total = g.l_svdd + cfg.alpha * g.l_c - cfg.beta * g.l_r;
  return out;
}

InfectedBreakdown infected_oc4seq_objective(
    const std::vector<Sequence>& benign_batch,
    const std::vector<PerturbedPair>& pairs, const OneClassModel& model,
    const DiscriminatorParams& omega_global,
    const DiscriminatorParams& omega_local, const TrainConfig& cfg,
    uint64_t seed) {
  require(model.variant == ModelVariant::oc4seq, ErrorKind::usage,
          "infected_oc4seq_objective requires an oc4seq model");
  InfectedBreakdown out = infected_svdd_objective(
      benign_batch, pairs, model.global_sphere.center, model.global_encoder,
      omega_global, cfg, seed);
  int offset = pairs.size() >= 2
                   ? marginal_shift_offset(pairs.size(), seed)
                   : 1;
  LocalLevelOut l = local_level(
      pointers(benign_batch), split_pairs_bases(pairs),
      split_pairs_variants(pairs), model.local_sphere.center,
      model.local_encoder, &omega_local, model.window, cfg.alpha, cfg.beta,
      cfg.lambda, offset, nullptr, nullptr);
  out.l_local = l.l_local;
  out.l_c_local = l.l_c_local;
  out.l_r_local = l.l_r_local;
  out.total += model.eta * (l.l_local + cfg.alpha * l.l_c_local -
                            cfg.beta * l.l_r_local);
  return out;
}

namespace {

std::vector<ParamView> encoder_views(EncoderParams& p) {
  return {view(p.embedding), view(p.w_input), view(p.w_hidden), view(p.bias)};
}

std::vector<ParamView> encoder_views(EncoderGrad& g) {
  return {view(g.embedding), view(g.w_input), view(g.w_hidden), view(g.bias)};
}

void append_disc_views(std::vector<ParamView>& out, DiscriminatorParams& p) {
  for (auto& w : p.weights) out.push_back(view(w));
  for (auto& b : p.biases) out.push_back(view(b));
}

void append_disc_views(std::vector<ParamView>& out, DiscGrad& g) {
  for (auto& w : g.weights) out.push_back(view(w));
  for (auto& b : g.biases) out.push_back(view(b));
}

void check_no_abnormal(const SequenceDataset& ds, const char* what) {
  for (const Sequence& s : ds.sequences) {
    for (int id : s.entries) {
      require(!ds.vocab.is_abnormal(id), ErrorKind::usage,
              std::string(what) +
                  " must not contain abnormal event ids (stealthiness)");
    }
  }
}

EpochRecord summarize_epoch(int epoch,
                            const std::vector<StepBreakdown>& steps,
                            size_t first_step) {
  EpochRecord rec;
  rec.epoch = epoch;
  size_t n = steps.size() - first_step;
  for (size_t i = first_step; i < steps.size(); ++i) {
    rec.mean.l_svdd += steps[i].l_svdd;
    rec.mean.l_local += steps[i].l_local;
    rec.mean.l_c += steps[i].l_c;
    rec.mean.l_r += steps[i].l_r;
    rec.mean.l_c_local += steps[i].l_c_local;
    rec.mean.l_r_local += steps[i].l_r_local;
    rec.mean.objective += steps[i].objective;
  }
  if (n > 0) {
    double inv = 1.0 / static_cast<double>(n);
    rec.mean.l_svdd *= inv;
    rec.mean.l_local *= inv;
    rec.mean.l_c *= inv;
    rec.mean.l_r *= inv;
    rec.mean.l_c_local *= inv;
    rec.mean.l_r_local *= inv;
    rec.mean.objective *= inv;
  }
  return rec;
}

}  // namespace

BenignTrainResult train_benign(const SequenceDataset& train,
                               const TrainConfig& cfg) {
  cfg.validate();
  require(!train.sequences.empty(), ErrorKind::size, "empty training set");
  for (const Sequence& s : train.sequences) {
    require(s.label == Label::normal && s.origin == Origin::benign,
            ErrorKind::usage, "benign training expects benign normal data");
  }
  const bool hierarchical = cfg.variant == ModelVariant::oc4seq;
  if (hierarchical) cfg.window.validate(train.k);

  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.vocab_size = train.vocab.size();

  BenignTrainResult result;
  OneClassModel& model = result.model;
  model.variant = cfg.variant;
  model.eta = cfg.eta;
  model.window = cfg.window;
  model.global_encoder = init_encoder(enc_cfg, substream(cfg.seed, 41).u64());
  model.global_sphere.weight_decay = cfg.lambda;
  model.local_sphere.weight_decay = cfg.lambda;

  std::vector<const Sequence*> all = pointers(train.sequences);
  model.global_sphere.center = mean_rep(all, model.global_encoder);
  if (hierarchical) {
    model.local_encoder = init_encoder(enc_cfg, substream(cfg.seed, 42).u64());
    model.local_sphere.center =
        mean_window_rep(all, model.local_encoder, cfg.window);
  }

  Adam adam(cfg.learning_rate);
  const int n = static_cast<int>(train.size());
  const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  const std::vector<const Sequence*> no_pairs;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = substream(cfg.seed, 100 + epoch);
    shuffle_rng.shuffle(order);
    size_t first_step = result.report.steps.size();

    for (int step = 0; step < steps_per_epoch; ++step) {
      int lo = step * cfg.batch_size;
      int hi = std::min(n, lo + cfg.batch_size);
      std::vector<const Sequence*> batch;
      batch.reserve(hi - lo);
      for (int i = lo; i < hi; ++i) batch.push_back(all[order[i]]);

      EncoderGrad d_theta = EncoderGrad::zeros(enc_cfg);
      GlobalLevelOut g = global_level(
          batch, no_pairs, no_pairs, model.global_sphere.center,
          model.global_encoder, nullptr, 0.0, 0.0, cfg.lambda, 1, &d_theta,
          nullptr);

      StepBreakdown sb;
      sb.l_svdd = g.l_svdd;
      sb.objective = g.l_svdd;

      std::vector<ParamView> params = encoder_views(model.global_encoder);
      EncoderGrad d_theta_l;
      std::vector<ParamView> grads = encoder_views(d_theta);
      if (hierarchical) {
        d_theta_l = EncoderGrad::zeros(enc_cfg);
        LocalLevelOut l = local_level(
            batch, no_pairs, no_pairs, model.local_sphere.center,
            model.local_encoder, nullptr, cfg.window, 0.0, 0.0, cfg.lambda, 1,
            &d_theta_l, nullptr);
        sb.l_local = l.l_local;
        sb.objective += cfg.eta * l.l_local;
        // The eta weight scales the local gradient.
        d_theta_l.embedding *= cfg.eta;
        d_theta_l.w_input *= cfg.eta;
        d_theta_l.w_hidden *= cfg.eta;
        d_theta_l.bias *= cfg.eta;
        for (ParamView v : encoder_views(model.local_encoder)) {
          params.push_back(v);
        }
        for (ParamView v : encoder_views(d_theta_l)) grads.push_back(v);
      }
      adam.step(params, grads);
      result.report.steps.push_back(sb);
    }
    result.report.epochs.push_back(
        summarize_epoch(epoch, result.report.steps, first_step));
  }
  return result;
}

InfectedTrainResult train_infected(const SequenceDataset& x_c,
                                   const PerturbedDataset& perturbed,
                                   const TrainConfig& cfg) {
  cfg.validate();
  const SequenceDataset& x_p = perturbed.x_p;
  require(x_p.size() >= 2, ErrorKind::size,
          "infected training needs at least 2 perturbed sequences");
  require(perturbed.bases.size() == x_p.size(), ErrorKind::usage,
          "pairing must be total over X_p");
  require(!x_c.sequences.empty(), ErrorKind::size, "X_c must not be empty");
  check_no_abnormal(x_c, "X_c");
  check_no_abnormal(x_p, "X_p");

  const bool hierarchical = cfg.variant == ModelVariant::oc4seq;
  if (hierarchical) cfg.window.validate(x_c.k);

  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.vocab_size = x_c.vocab.size();

  InfectedTrainResult result;
  OneClassModel& model = result.model;
  model.variant = cfg.variant;
  model.eta = cfg.eta;
  model.window = cfg.window;
  model.global_encoder = init_encoder(enc_cfg, substream(cfg.seed, 41).u64());
  model.global_sphere.weight_decay = cfg.lambda;
  model.local_sphere.weight_decay = cfg.lambda;
  result.omega = init_discriminator(enc_cfg.hidden_dim, cfg.disc_hidden,
                                    substream(cfg.seed, 43).u64());

  // The benign center comes from X_c and stays frozen for the whole run; the
  // drifting loss pulls c_p toward a fixed target.
  std::vector<const Sequence*> all_c = pointers(x_c.sequences);
  std::vector<const Sequence*> all_p = pointers(x_p.sequences);
  std::vector<const Sequence*> all_bases;
  all_bases.reserve(perturbed.bases.size());
  for (const Sequence& b : perturbed.bases) all_bases.push_back(&b);

  model.global_sphere.center = mean_rep(all_c, model.global_encoder);
  if (hierarchical) {
    model.local_encoder = init_encoder(enc_cfg, substream(cfg.seed, 42).u64());
    model.local_sphere.center =
        mean_window_rep(all_c, model.local_encoder, cfg.window);
    result.omega_local = init_discriminator(
        enc_cfg.hidden_dim, cfg.disc_hidden, substream(cfg.seed, 44).u64());
  }

  const int n_c = static_cast<int>(x_c.size());
  const int n_p_total = static_cast<int>(x_p.size());
  double fraction =
      static_cast<double>(n_p_total) / static_cast<double>(n_c + n_p_total);
  int n_p_step = static_cast<int>(std::llround(cfg.batch_size * fraction));
  n_p_step = std::clamp(n_p_step, 2, std::min(n_p_total, cfg.batch_size));
  int n_b_step = std::max(0, cfg.batch_size - n_p_step);
  n_b_step = std::min(n_b_step, n_c);
  const int steps_per_epoch =
      n_b_step > 0 ? (n_c + n_b_step - 1) / n_b_step
                   : (n_p_total + n_p_step - 1) / n_p_step;

  Adam adam(cfg.learning_rate);
  std::vector<int> order_c(n_c), order_p(n_p_total);
  for (int i = 0; i < n_c; ++i) order_c[i] = i;
  for (int i = 0; i < n_p_total; ++i) order_p[i] = i;

  int global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng_c = substream(cfg.seed, 100 + epoch);
    Rng rng_p = substream(cfg.seed, 200 + epoch);
    rng_c.shuffle(order_c);
    rng_p.shuffle(order_p);
    size_t first_step = result.report.steps.size();

    for (int step = 0; step < steps_per_epoch; ++step, ++global_step) {
      std::vector<const Sequence*> benign;
      if (n_b_step > 0) {
        int lo = step * n_b_step;
        int hi = std::min(n_c, lo + n_b_step);
        benign.reserve(hi - lo);
        for (int i = lo; i < hi; ++i) benign.push_back(all_c[order_c[i]]);
      }
      std::vector<const Sequence*> bases, variants;
      bases.reserve(n_p_step);
      variants.reserve(n_p_step);
      for (int j = 0; j < n_p_step; ++j) {
        int idx = order_p[(step * n_p_step + j) % n_p_total];
        bases.push_back(all_bases[idx]);
        variants.push_back(all_p[idx]);
      }

      int offset = marginal_shift_offset(
          n_p_step, substream(cfg.seed, 300).derive(global_step).u64());

      EncoderGrad d_theta = EncoderGrad::zeros(enc_cfg);
      DiscGrad d_omega = DiscGrad::zeros(result.omega);
      GlobalLevelOut g = global_level(
          benign, bases, variants, model.global_sphere.center,
          model.global_encoder, &result.omega, cfg.alpha, cfg.beta,
          cfg.lambda, offset, &d_theta, &d_omega);

      StepBreakdown sb;
      sb.l_svdd = g.l_svdd;
      sb.l_c = g.l_c;
      sb.l_r = g.l_r;
      sb.objective = g.l_svdd + cfg.alpha * g.l_c - cfg.beta * g.l_r;

      std::vector<ParamView> params = encoder_views(model.global_encoder);
      append_disc_views(params, result.omega);
      std::vector<ParamView> grads = encoder_views(d_theta);
      append_disc_views(grads, d_omega);

      EncoderGrad d_theta_l;
      DiscGrad d_omega_l;
      if (hierarchical) {
        d_theta_l = EncoderGrad::zeros(enc_cfg);
        d_omega_l = DiscGrad::zeros(result.omega_local);
        LocalLevelOut l = local_level(
            benign, bases, variants, model.local_sphere.center,
            model.local_encoder, &result.omega_local, cfg.window, cfg.alpha,
            cfg.beta, cfg.lambda, offset, &d_theta_l, &d_omega_l);
        sb.l_local = l.l_local;
        sb.l_c_local = l.l_c_local;
        sb.l_r_local = l.l_r_local;
        sb.objective += cfg.eta * (l.l_local + cfg.alpha * l.l_c_local -
                                   cfg.beta * l.l_r_local);
        d_theta_l.embedding *= cfg.eta;
        d_theta_l.w_input *= cfg.eta;
        d_theta_l.w_hidden *= cfg.eta;
        d_theta_l.bias *= cfg.eta;
        for (auto& w : d_omega_l.weights) w *= cfg.eta;
        for (auto& b : d_omega_l.biases) b *= cfg.eta;
        for (ParamView v : encoder_views(model.local_encoder)) {
          params.push_back(v);
        }
        append_disc_views(params, result.omega_local);
        for (ParamView v : encoder_views(d_theta_l)) grads.push_back(v);
        append_disc_views(grads, d_omega_l);
      }

      adam.step(params, grads);
      result.report.steps.push_back(sb);
    }

    EpochRecord rec =
        summarize_epoch(epoch, result.report.steps, first_step);
    rec.c_drift = (mean_rep(all_p, model.global_encoder) -
                   model.global_sphere.center)
                      .norm();
    if (hierarchical) {
      rec.c_drift_local =
          (mean_window_rep(all_p, model.local_encoder, cfg.window) -
           model.local_sphere.center)
              .norm();
    }
    result.report.epochs.push_back(rec);
  }
  return result;
}

}  // namespace ocsad
