#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "topicnet/autodiff.hpp"
#include "topicnet/corpus.hpp"

namespace topicnet {

struct ParamTensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd adam_m, adam_v;

  bool empty() const { return value.size() == 0; }
  void init_opt_state() {
    adam_m = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    adam_v = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
};

// All trainable tensors of the decoder and encoder. Embedding layer t holds
// K_t Gaussians as row-stacked means and log-variances; layer 0 is the word
// layer with K_0 = V. Encoder tensors for layer t live at index t; the
// downward heads (w2/b2/w3/b3) exist for t = 1..T only.
struct ModelParams {
  std::vector<int> layer_sizes;   // K_0..K_T, K_0 = V
  std::vector<int> hidden_sizes;  // upward widths H_0..H_T
  int embed_dim = 0;
  double scale_c = 1.0;           // gamma rate c^(t), fixed constant
  double shape_floor = 1e-3;      // floor on gamma shapes Phi*theta
  double rate_floor = 1e-10;      // floor inside the Poisson log
  double k_floor = 1e-3;          // Weibull shape clamp inside the analytic KL

  std::vector<ParamTensor> mean, log_var;          // t = 0..T
  std::vector<ParamTensor> w1, b1;                 // t = 0..T
  std::vector<ParamTensor> skip_proj;              // t = 1..T; empty when widths match
  std::vector<ParamTensor> w2, b2, w3, b3;         // t = 1..T (index 0 unused)
  ParamTensor log_gamma_shape;                     // K_T

  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int vocab_size() const { return layer_sizes[0]; }
  Eigen::VectorXd gamma_shape() const { return log_gamma_shape.value.array().exp(); }

  std::vector<ParamTensor*> trainables();
  std::vector<const ParamTensor*> trainables() const;
  void validate() const;
};

// Per-document variational state, layers 1..T stored at index t.
struct LatentState {
  std::vector<Eigen::VectorXd> weibull_k, weibull_lambda, theta;
  std::vector<Eigen::VectorXd> hidden_up;  // h'(0..T)
};

ModelParams init_params(const std::vector<int>& layer_sizes, const std::vector<int>& hidden_sizes,
                        int embed_dim, std::uint64_t seed);

// Column-stochastic K_{t-1} x K_t transition matrix of layer t in [1, T].
Eigen::MatrixXd compute_phi(const ModelParams& params, int layer);

// Poisson rate Phi^(1) * theta_1 over the vocabulary.
Eigen::VectorXd decode(const ModelParams& params, const Eigen::VectorXd& theta_1);

// Gamma prior shape at layer t: Phi^(t+1) theta_next for t < T (floored),
// gamma_shape for t = T.
Eigen::VectorXd prior_shape(const ModelParams& params, int layer,
                            const Eigen::VectorXd* theta_next);

// theta = lambda * (-ln(1-u))^(1/k), elementwise; u must lie in (0,1).
Eigen::VectorXd sample_weibull(const Eigen::VectorXd& k, const Eigen::VectorXd& lambda,
                               const Eigen::VectorXd& u);

LatentState encode(const ModelParams& params, const Document& doc, bool sample,
                   std::mt19937_64& rng);

// --- tape-building blocks shared by training and encoding ---

struct TapeParams {
  std::vector<ad::Var> mean, log_var, w1, b1, skip_proj, w2, b2, w3, b3;
  ad::Var log_gamma_shape;
};

TapeParams lift_params(ad::Tape& tape, const ModelParams& params, bool requires_grad);

// phi[t] for t = 1..T (index 0 unset).
std::vector<ad::Var> compute_phi_vars(ad::Tape& tape, const ModelParams& params,
                                      const TapeParams& tp);

struct DocForward {
  std::vector<ad::Var> weibull_k, weibull_lambda, theta;  // 1..T at index t
  std::vector<ad::Var> prior_shape;                       // floored, 1..T
  std::vector<ad::Var> hidden_up;                         // 0..T
  ad::Var rate;                                           // Phi^(1) theta^(1)
};

DocForward forward_document(ad::Tape& tape, const ModelParams& params, const TapeParams& tp,
                            const std::vector<ad::Var>& phi, const Document& doc, bool sample,
                            std::mt19937_64& rng);

// --- checkpointing ---

void save_checkpoint(const ModelParams& params, const std::string& path,
                     const std::string& config_hash, std::uint64_t seed, long step);

struct Checkpoint {
  ModelParams params;
  std::string config_hash;
  std::uint64_t seed = 0;
  long step = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace topicnet
