#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ocsad/corpus.hpp"

namespace ocsad {

using Representation = Eigen::VectorXd;

enum class CellType { lstm, gru };

std::string to_string(CellType c);
CellType cell_type_from_string(const std::string& s);

struct EncoderConfig {
  int vocab_size = 0;
  int embed_dim = 100;
  int hidden_dim = 256;
  CellType cell = CellType::lstm;

  int gate_count() const { return cell == CellType::lstm ? 4 : 3; }
};

// Embedding table plus a single-layer gated recurrent cell. Weight layout:
// w_input/w_hidden stack the gate blocks row-wise, LSTM order [i f g o],
// GRU order [r z n] with the reset gate applied to the previous hidden
// state before the candidate matmul.
struct EncoderParams {
  EncoderConfig cfg;
  Eigen::MatrixXd embedding;  // embed_dim x vocab_size, one column per id
  Eigen::MatrixXd w_input;    // gates*hidden_dim x embed_dim
  Eigen::MatrixXd w_hidden;   // gates*hidden_dim x hidden_dim
  Eigen::VectorXd bias;       // gates*hidden_dim

  void check_finite() const;
  // Weight matrices subject to the Frobenius decay term (biases excluded).
  double weight_squared_norm() const;
};

// Uniform init in [-1/sqrt(hidden_dim), +1/sqrt(hidden_dim)], seeded.
EncoderParams init_encoder(const EncoderConfig& cfg, uint64_t seed);

// Gradient container; same shapes as the parameters.
struct EncoderGrad {
  Eigen::MatrixXd embedding;
  Eigen::MatrixXd w_input;
  Eigen::MatrixXd w_hidden;
  Eigen::VectorXd bias;

  static EncoderGrad zeros(const EncoderConfig& cfg);
  void add_weight_decay(const EncoderParams& params, double lambda);
};

// Forward activations for one batch of equal-length sequences; everything
// backprop-through-time needs.
struct EncoderTape {
  const EncoderParams* params = nullptr;
  std::vector<std::vector<int>> tokens;     // [step][sequence]
  std::vector<Eigen::MatrixXd> gates;       // post-activation, per step
  std::vector<Eigen::MatrixXd> cell_state;  // LSTM only
  std::vector<Eigen::MatrixXd> hidden;      // h_t, per step
  Eigen::MatrixXd final_hidden;             // hidden_dim x batch

  int batch() const { return static_cast<int>(final_hidden.cols()); }
  int steps() const { return static_cast<int>(tokens.size()); }
};

// Representation of a sequence: the final hidden state after processing the
// embedded entries in order.
Representation encode(const Sequence& x, const EncoderParams& params);

// Batched forward over sequences [first, first+count) of the container.
EncoderTape encode_batch(const std::vector<Sequence>& batch,
                         const EncoderParams& params);
EncoderTape encode_batch(const std::vector<const Sequence*>& batch,
                         const EncoderParams& params);

// Accumulates d(objective)/d(params) into `grad` given the gradient of the
// objective with respect to each final hidden state (hidden_dim x batch).
void encoder_backward(const EncoderTape& tape,
                      const Eigen::MatrixXd& d_final_hidden,
                      EncoderGrad& grad);

// A scalar functional of the batch representations (columns of a
// hidden_dim x batch matrix). Used by encode_gradient and by the
// finite-difference test harness.
struct RepObjective {
  virtual ~RepObjective() = default;
  virtual double value(const Eigen::MatrixXd& reps) const = 0;
  virtual Eigen::MatrixXd rep_gradient(const Eigen::MatrixXd& reps) const = 0;
};

// Analytic gradient of objective(representations(params)) over all encoder
// parameters.
EncoderGrad encode_gradient(const std::vector<Sequence>& batch,
                            const EncoderParams& params,
                            const RepObjective& objective);

struct WindowSpec {
  int w = 8;
  int s = 4;

  // S = floor((K - w) / s) + 1
  int count(int k) const;
  void validate(int k) const;
};

// Sliding windows [i*s, i*s + w) in order, i = 0..S-1.
std::vector<Sequence> subsequences(const Sequence& x, const WindowSpec& spec);

// All windows of all sequences, window-major: result[s*batch + n] is the
// s-th window of sequence n. Avoids materialising Sequence copies.
std::vector<Sequence> window_batch(const std::vector<const Sequence*>& batch,
                                   const WindowSpec& spec);

}  // namespace ocsad
