#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topicnet/corpus.hpp"
#include "topicnet/model.hpp"
#include "topicnet/taxonomy.hpp"

namespace topicnet {

struct LossBreakdown {
  double neg_log_likelihood = 0.0;
  std::vector<double> kl_per_layer;  // index 1..T used
  double prior_loss = 0.0;
  double beta = 0.0;
  double margin = 0.0;
  double total = 0.0;
  int skipped_childless = 0;  // parents without children seen by the hinge

  double kl_sum() const {
    double s = 0.0;
    for (double v : kl_per_layer) s += v;
    return s;
  }
};

struct GradientSet {
  // parallel to ModelParams::trainables(), same order and shapes
  std::vector<Eigen::MatrixXd> grads;
};

struct ObjectiveConfig {
  double beta = 1.0;             // weight of the taxonomy prior
  double margin = 10.0;          // hinge margin m
  double gamma_threshold = 2.0;  // threshold of the hinge-relaxed KL
  int theta_samples = 1;         // reparameterized samples per document per step
  bool sample_theta = true;      // false = deterministic Weibull-mean forward
  bool literal_hinge = false;    // use the printed sign m - max_pos + min_neg
};

// Sum_v [x_v ln rate_v - rate_v - ln x_v!], rate floored inside the log.
double poisson_log_likelihood(const Document& counts, const Eigen::VectorXd& rate,
                              double rate_floor = 1e-10);

// Analytic KL(Weibull(k, lambda) || Gamma(alpha, rate beta)).
double kl_weibull_gamma(double k, double lambda, double alpha, double beta_rate);

// Hinge loss of one parent topic against its child layer; zero when the topic
// has no children or the whole child layer is under it.
double margin_loss(const TopicTree& tree, const ModelParams& params, int upper_layer, int topic,
                   double margin, double gamma_threshold);

// Sum of margin_loss over every topic of layers 1..T.
double prior_loss(const TopicTree& tree, const ModelParams& params, double margin,
                  double gamma_threshold);

// Monte-Carlo estimate of -ELBO over the given documents (batch mean).
// The prior term is zero here; see total_loss_and_gradients for the full
// objective.
LossBreakdown elbo_loss(const ModelParams& params, const SparseCorpus& corpus,
                        const std::vector<int>& batch, std::mt19937_64& rng,
                        const ObjectiveConfig& cfg);

// Full objective (-ELBO batch mean + beta * prior) with reverse-mode
// gradients for every trainable tensor. tree == nullptr gives the
// Gaussian SawETM mode (no prior term).
std::pair<LossBreakdown, GradientSet> total_loss_and_gradients(
    ModelParams& params, const SparseCorpus& corpus, const std::vector<int>& batch,
    const TopicTree* tree, const ObjectiveConfig& cfg, std::mt19937_64& rng);

// Loss only, same RNG contract, used by finite-difference checks.
LossBreakdown total_loss(ModelParams& params, const SparseCorpus& corpus,
                         const std::vector<int>& batch, const TopicTree* tree,
                         const ObjectiveConfig& cfg, std::uint64_t rng_seed);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected adaptive-moment update; step counts from 1.
void adam_step(ModelParams& params, const GradientSet& grads, const AdamConfig& cfg, long step);

// Maps tree child index sets onto model topic indices; word-layer children
// become vocabulary ids via tree.word_ids. Throws on a tree/model
// layer-size mismatch.
std::vector<std::vector<std::vector<int>>> tree_children_for_model(const TopicTree& tree,
                                                                   const ModelParams& params);

}  // namespace topicnet
