#include "ocsad/encoder.hpp"

#include <cmath>

namespace ocsad {

std::string to_string(CellType c) { return c == CellType::lstm ? "lstm" : "gru"; }

CellType cell_type_from_string(const std::string& s) {
  if (s == "lstm") return CellType::lstm;
  if (s == "gru") return CellType::gru;
  fail(ErrorKind::config, "unknown cell type '" + s + "'");
}

void EncoderParams::check_finite() const {
  bool ok = embedding.allFinite() && w_input.allFinite() &&
            w_hidden.allFinite() && bias.allFinite();
  require(ok, ErrorKind::numeric, "encoder parameters contain non-finite "
                                  "values");
}

double EncoderParams::weight_squared_norm() const {
  return embedding.squaredNorm() + w_input.squaredNorm() +
         w_hidden.squaredNorm();
}

EncoderParams init_encoder(const EncoderConfig& cfg, uint64_t seed) {
  require(cfg.vocab_size >= 1 && cfg.embed_dim >= 1 && cfg.hidden_dim >= 1,
          ErrorKind::config, "encoder dimensions must be positive");
  EncoderParams p;
  p.cfg = cfg;
  const int g = cfg.gate_count();
  p.embedding.resize(cfg.embed_dim, cfg.vocab_size);
  p.w_input.resize(g * cfg.hidden_dim, cfg.embed_dim);
  p.w_hidden.resize(g * cfg.hidden_dim, cfg.hidden_dim);
  p.bias.resize(g * cfg.hidden_dim);

  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  Rng rng = substream(seed, 21);
  auto fill = [&](auto& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, j) = rng.uniform(-bound, bound);
      }
    }
  };
  fill(p.embedding);
  fill(p.w_input);
  fill(p.w_hidden);
  Eigen::MatrixXd b(p.bias.size(), 1);
  fill(b);
  p.bias = b.col(0);
  return p;
}

EncoderGrad EncoderGrad::zeros(const EncoderConfig& cfg) {
  const int g = cfg.gate_count();
  EncoderGrad grad;
  grad.embedding = Eigen::MatrixXd::Zero(cfg.embed_dim, cfg.vocab_size);
  grad.w_input = Eigen::MatrixXd::Zero(g * cfg.hidden_dim, cfg.embed_dim);
  grad.w_hidden = Eigen::MatrixXd::Zero(g * cfg.hidden_dim, cfg.hidden_dim);
  grad.bias = Eigen::VectorXd::Zero(g * cfg.hidden_dim);
  return grad;
}

void EncoderGrad::add_weight_decay(const EncoderParams& params,
                                   double lambda) {
  if (lambda == 0.0) return;
  embedding += 2.0 * lambda * params.embedding;
  w_input += 2.0 * lambda * params.w_input;
  w_hidden += 2.0 * lambda * params.w_hidden;
}

namespace {

Eigen::MatrixXd gather_embeddings(const EncoderParams& p,
                                  const std::vector<int>& ids) {
  Eigen::MatrixXd x(p.cfg.embed_dim, ids.size());
  for (size_t n = 0; n < ids.size(); ++n) {
    require(ids[n] >= 0 && ids[n] < p.cfg.vocab_size, ErrorKind::vocab,
            "id " + std::to_string(ids[n]) + " outside vocab of size " +
                std::to_string(p.cfg.vocab_size));
    x.col(n) = p.embedding.col(ids[n]);
  }
  return x;
}

EncoderTape run_forward(const std::vector<const Sequence*>& batch,
                        const EncoderParams& params) {
  require(!batch.empty(), ErrorKind::size, "empty batch");
  const int steps = batch[0]->length();
  require(steps >= 1, ErrorKind::size, "sequences must have length >= 1");
  for (const Sequence* s : batch) {
    require(s->length() == steps, ErrorKind::length,
            "batch sequences must share one length");
  }

  const int n = static_cast<int>(batch.size());
  const int dh = params.cfg.hidden_dim;
  const bool lstm = params.cfg.cell == CellType::lstm;

  EncoderTape tape;
  tape.params = &params;
  tape.tokens.resize(steps, std::vector<int>(n));
  tape.gates.reserve(steps);
  tape.hidden.reserve(steps);
  if (lstm) tape.cell_state.reserve(steps);

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dh, n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dh, n);

  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < n; ++j) tape.tokens[t][j] = batch[j]->entries[t];
    Eigen::MatrixXd x = gather_embeddings(params, tape.tokens[t]);

    if (lstm) {
      Eigen::MatrixXd z = params.w_input * x + params.w_hidden * h;
      z.colwise() += params.bias;
      Eigen::MatrixXd gates(4 * dh, n);
      gates.middleRows(0, dh) =
          z.middleRows(0, dh).unaryExpr([](double v) { return sigmoid(v); });
      gates.middleRows(dh, dh) =
          z.middleRows(dh, dh).unaryExpr([](double v) { return sigmoid(v); });
      gates.middleRows(2 * dh, dh) = z.middleRows(2 * dh, dh).array().tanh();
      gates.middleRows(3 * dh, dh) = z.middleRows(3 * dh, dh)
                                         .unaryExpr([](double v) { return sigmoid(v); });
      c = gates.middleRows(dh, dh).cwiseProduct(c) +
          gates.middleRows(0, dh).cwiseProduct(gates.middleRows(2 * dh, dh));
      h = gates.middleRows(3 * dh, dh)
              .cwiseProduct(c.array().tanh().matrix());
      tape.gates.push_back(std::move(gates));
      tape.cell_state.push_back(c);
    } else {
      // GRU: r and z from x and h, candidate from x and r*h.
      Eigen::MatrixXd z_rz = params.w_input.middleRows(0, 2 * dh) * x +
                             params.w_hidden.middleRows(0, 2 * dh) * h;
      z_rz.colwise() += params.bias.segment(0, 2 * dh);
      Eigen::MatrixXd gates(3 * dh, n);
      gates.middleRows(0, dh) =
          z_rz.middleRows(0, dh).unaryExpr([](double v) { return sigmoid(v); });
      gates.middleRows(dh, dh) =
          z_rz.middleRows(dh, dh).unaryExpr([](double v) { return sigmoid(v); });
      Eigen::MatrixXd rh = gates.middleRows(0, dh).cwiseProduct(h);
      Eigen::MatrixXd a = params.w_input.middleRows(2 * dh, dh) * x +
                          params.w_hidden.middleRows(2 * dh, dh) * rh;
      a.colwise() += params.bias.segment(2 * dh, dh);
      gates.middleRows(2 * dh, dh) = a.array().tanh();
      h = gates.middleRows(dh, dh).cwiseProduct(h) +
          (Eigen::MatrixXd::Ones(dh, n) - gates.middleRows(dh, dh))
              .cwiseProduct(gates.middleRows(2 * dh, dh));
      tape.gates.push_back(std::move(gates));
    }
    tape.hidden.push_back(h);
  }

  tape.final_hidden = h;
  return tape;
}

}  // namespace

Representation encode(const Sequence& x, const EncoderParams& params) {
  std::vector<const Sequence*> batch{&x};
  return run_forward(batch, params).final_hidden.col(0);
}

EncoderTape encode_batch(const std::vector<Sequence>& batch,
                         const EncoderParams& params) {
  std::vector<const Sequence*> ptrs;
  ptrs.reserve(batch.size());
  for (const Sequence& s : batch) ptrs.push_back(&s);
  return run_forward(ptrs, params);
}

EncoderTape encode_batch(const std::vector<const Sequence*>& batch,
                         const EncoderParams& params) {
  return run_forward(batch, params);
}

void encoder_backward(const EncoderTape& tape,
                      const Eigen::MatrixXd& d_final_hidden,
                      EncoderGrad& grad) {
  const EncoderParams& p = *tape.params;
  const int dh = p.cfg.hidden_dim;
  const int n = tape.batch();
  const int steps = tape.steps();
  require(d_final_hidden.rows() == dh && d_final_hidden.cols() == n,
          ErrorKind::shape, "d_final_hidden shape mismatch");

  Eigen::MatrixXd dh_next = d_final_hidden;
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(dh, n);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(dh, n);

  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::MatrixXd& gates = tape.gates[t];
    const Eigen::MatrixXd& h_prev = t > 0 ? tape.hidden[t - 1] : zero;
    Eigen::MatrixXd x = gather_embeddings(p, tape.tokens[t]);
    Eigen::MatrixXd dx;

    if (p.cfg.cell == CellType::lstm) {
      auto gi = gates.middleRows(0, dh);
      auto gf = gates.middleRows(dh, dh);
      auto gg = gates.middleRows(2 * dh, dh);
      auto go = gates.middleRows(3 * dh, dh);
      const Eigen::MatrixXd& c_t = tape.cell_state[t];
      const Eigen::MatrixXd& c_prev = t > 0 ? tape.cell_state[t - 1] : zero;
      Eigen::MatrixXd tanh_c = c_t.array().tanh();

      Eigen::MatrixXd d_o = dh_next.cwiseProduct(tanh_c);
      Eigen::MatrixXd dc =
          dc_next + dh_next.cwiseProduct(go).cwiseProduct(
                        (1.0 - tanh_c.array().square()).matrix());
      Eigen::MatrixXd d_i = dc.cwiseProduct(gg);
      Eigen::MatrixXd d_g = dc.cwiseProduct(gi);
      Eigen::MatrixXd d_f = dc.cwiseProduct(c_prev);
      dc_next = dc.cwiseProduct(gf);

      Eigen::MatrixXd dz(4 * dh, n);
      dz.middleRows(0, dh) =
          d_i.cwiseProduct(gi).cwiseProduct((1.0 - gi.array()).matrix());
      dz.middleRows(dh, dh) =
          d_f.cwiseProduct(gf).cwiseProduct((1.0 - gf.array()).matrix());
      dz.middleRows(2 * dh, dh) =
          d_g.cwiseProduct((1.0 - gg.array().square()).matrix());
      dz.middleRows(3 * dh, dh) =
          d_o.cwiseProduct(go).cwiseProduct((1.0 - go.array()).matrix());

      grad.w_input += dz * x.transpose();
      grad.w_hidden += dz * h_prev.transpose();
      grad.bias += dz.rowwise().sum();
      dh_next = p.w_hidden.transpose() * dz;
      dx = p.w_input.transpose() * dz;
    } else {
      auto gr = gates.middleRows(0, dh);
      auto gz = gates.middleRows(dh, dh);
      auto gn = gates.middleRows(2 * dh, dh);
      Eigen::MatrixXd rh = gr.cwiseProduct(h_prev);

      Eigen::MatrixXd d_z = dh_next.cwiseProduct(h_prev - gn);
      Eigen::MatrixXd d_n = dh_next.cwiseProduct(
          (Eigen::MatrixXd::Ones(dh, n) - gz));
      Eigen::MatrixXd dh_prev = dh_next.cwiseProduct(gz);

      Eigen::MatrixXd da =
          d_n.cwiseProduct((1.0 - gn.array().square()).matrix());
      grad.w_input.middleRows(2 * dh, dh) += da * x.transpose();
      grad.w_hidden.middleRows(2 * dh, dh) += da * rh.transpose();
      grad.bias.segment(2 * dh, dh) += da.rowwise().sum();

      Eigen::MatrixXd d_rh =
          p.w_hidden.middleRows(2 * dh, dh).transpose() * da;
      Eigen::MatrixXd d_r = d_rh.cwiseProduct(h_prev);
      dh_prev += d_rh.cwiseProduct(gr);

      Eigen::MatrixXd dz_rz(2 * dh, n);
      dz_rz.middleRows(0, dh) =
          d_r.cwiseProduct(gr).cwiseProduct((1.0 - gr.array()).matrix());
      dz_rz.middleRows(dh, dh) =
          d_z.cwiseProduct(gz).cwiseProduct((1.0 - gz.array()).matrix());

      grad.w_input.middleRows(0, 2 * dh) += dz_rz * x.transpose();
      grad.w_hidden.middleRows(0, 2 * dh) += dz_rz * h_prev.transpose();
      grad.bias.segment(0, 2 * dh) += dz_rz.rowwise().sum();

      dh_prev += p.w_hidden.middleRows(0, 2 * dh).transpose() * dz_rz;
      dx = p.w_input.middleRows(0, 2 * dh).transpose() * dz_rz +
           p.w_input.middleRows(2 * dh, dh).transpose() * da;
      dh_next = std::move(dh_prev);
    }

    for (int j = 0; j < n; ++j) {
      grad.embedding.col(tape.tokens[t][j]) += dx.col(j);
    }
  }
}

EncoderGrad encode_gradient(const std::vector<Sequence>& batch,
                            const EncoderParams& params,
                            const RepObjective& objective) {
  EncoderTape tape = encode_batch(batch, params);
  double v = objective.value(tape.final_hidden);
  require(std::isfinite(v), ErrorKind::numeric, "objective is non-finite");
  EncoderGrad grad = EncoderGrad::zeros(params.cfg);
  encoder_backward(tape, objective.rep_gradient(tape.final_hidden), grad);
  return grad;
}

int WindowSpec::count(int k) const { return (k - w) / s + 1; }

void WindowSpec::validate(int k) const {
  require(w >= 1 && s >= 1, ErrorKind::config, "window needs w >= 1, s >= 1");
  require(w <= k, ErrorKind::bounds,
          "window length " + std::to_string(w) + " exceeds K=" +
              std::to_string(k));
}

std::vector<Sequence> subsequences(const Sequence& x, const WindowSpec& spec) {
  spec.validate(x.length());
  const int count = spec.count(x.length());
  std::vector<Sequence> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Sequence sub;
    sub.label = x.label;
    sub.origin = x.origin;
    sub.entries.assign(x.entries.begin() + i * spec.s,
                       x.entries.begin() + i * spec.s + spec.w);
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<Sequence> window_batch(const std::vector<const Sequence*>& batch,
                                   const WindowSpec& spec) {
  require(!batch.empty(), ErrorKind::size, "empty batch");
  const int k = batch[0]->length();
  spec.validate(k);
  const int count = spec.count(k);
  std::vector<Sequence> out;
  out.reserve(count * batch.size());
  for (int i = 0; i < count; ++i) {
    for (const Sequence* x : batch) {
      Sequence sub;
      sub.label = x->label;
      sub.origin = x->origin;
      sub.entries.assign(x->entries.begin() + i * spec.s,
                         x->entries.begin() + i * spec.s + spec.w);
      out.push_back(std::move(sub));
    }
  }
  return out;
}

}  // namespace ocsad
