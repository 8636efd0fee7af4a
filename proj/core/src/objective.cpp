#include "topicnet/objective.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <stdexcept>

#include "topicnet/gaussian.hpp"

namespace topicnet {

namespace {
constexpr double kEulerGamma = 0.57721566490153286061;
}

double poisson_log_likelihood(const Document& counts, const Eigen::VectorXd& rate,
                              double rate_floor) {
  double ll = -rate.sum();
  for (const auto& [id, c] : counts)
    ll += c * std::log(rate(id) + rate_floor) - std::lgamma(c + 1.0);
  return ll;
}

double kl_weibull_gamma(double k, double lambda, double alpha, double beta_rate) {
  if (k <= 0.0 || lambda <= 0.0 || alpha <= 0.0 || beta_rate <= 0.0)
    throw std::invalid_argument("kl_weibull_gamma: parameters must be positive");
  k = std::max(k, 1e-3);
  return kEulerGamma * alpha / k - alpha * std::log(lambda) + std::log(k) +
         beta_rate * lambda * std::tgamma(1.0 + 1.0 / k) - kEulerGamma - 1.0 -
         alpha * std::log(beta_rate) + std::lgamma(alpha);
}

std::vector<std::vector<std::vector<int>>> tree_children_for_model(const TopicTree& tree,
                                                                   const ModelParams& params) {
  const int T = tree.depth();
  if (T != params.depth())
    throw std::runtime_error("tree depth does not match model depth");
  const auto sizes = tree.layer_sizes();
  for (int t = 1; t <= T; ++t)
    if (sizes[t] != params.layer_sizes[t])
      throw std::runtime_error("tree/model layer size mismatch at layer " + std::to_string(t));
  if (!tree.word_ids.empty() &&
      static_cast<int>(tree.word_ids.size()) != sizes[0])
    throw std::runtime_error("tree word_ids size mismatch");
  if (tree.word_ids.empty() && sizes[0] != params.layer_sizes[0])
    throw std::runtime_error("tree word layer does not cover model vocabulary");

  auto children = tree.children();
  // word-layer children become vocabulary ids
  if (!tree.word_ids.empty()) {
    for (auto& set : children[0])
      for (int& i : set) i = tree.word_ids[i];
  }
  return children;
}

double margin_loss(const TopicTree& tree, const ModelParams& params, int upper_layer, int topic,
                   double margin, double gamma_threshold) {
  auto children = tree_children_for_model(tree, params);
  const auto& d_set = children[upper_layer - 1][topic];
  const int kc = params.layer_sizes[upper_layer - 1];
  if (d_set.empty() || static_cast<int>(d_set.size()) == kc) return 0.0;

  std::vector<char> is_child(kc, 0);
  for (int i : d_set) is_child[i] = 1;
  const auto& mc = params.mean[upper_layer - 1].value;
  const auto& lc = params.log_var[upper_layer - 1].value;
  const auto& mp = params.mean[upper_layer].value;
  const auto& lp = params.log_var[upper_layer].value;

  double max_pos = -1.0, min_neg = -1.0;
  for (int i = 0; i < kc; ++i) {
    const double d = thresholded_divergence_kl(
        gaussian_kl(mc.row(i), lc.row(i), mp.row(topic), lp.row(topic)), gamma_threshold);
    if (is_child[i]) {
      if (max_pos < 0.0 || d > max_pos) max_pos = d;
    } else {
      if (min_neg < 0.0 || d < min_neg) min_neg = d;
    }
  }
  return std::max(0.0, margin + max_pos - min_neg);
}

double prior_loss(const TopicTree& tree, const ModelParams& params, double margin,
                  double gamma_threshold) {
  double total = 0.0;
  for (int t = 1; t <= tree.depth(); ++t)
    for (int j = 0; j < static_cast<int>(tree.layers[t].size()); ++j)
      total += margin_loss(tree, params, t, j, margin, gamma_threshold);
  return total;
}

namespace {

struct TapeLoss {
  ad::Var total;
  LossBreakdown breakdown;
};

// Builds the full objective on one tape. Batch terms are means over
// non-empty documents; empty documents are skipped.
TapeLoss build_loss(ad::Tape& tape, const ModelParams& params, const TapeParams& tp,
                    const SparseCorpus& corpus, const std::vector<int>& batch,
                    const TopicTree* tree, const ObjectiveConfig& cfg, std::mt19937_64& rng) {
  const int T = params.depth();
  std::vector<ad::Var> phi = compute_phi_vars(tape, params, tp);

  std::vector<ad::Var> nll_terms;
  std::vector<std::vector<ad::Var>> kl_terms(T + 1);
  for (int doc_id : batch) {
    const Document& doc = corpus.docs[doc_id];
    if (doc.empty()) continue;
    for (int s = 0; s < cfg.theta_samples; ++s) {
      DocForward fwd =
          forward_document(tape, params, tp, phi, doc, cfg.sample_theta, rng);
      nll_terms.push_back(
          tape.scale(tape.poisson_nll(doc, fwd.rate, params.rate_floor),
                     1.0 / cfg.theta_samples));
      for (int t = 1; t <= T; ++t)
        kl_terms[t].push_back(tape.scale(
            tape.kl_weibull_gamma_sum(fwd.weibull_k[t], fwd.weibull_lambda[t],
                                      fwd.prior_shape[t], params.scale_c, params.k_floor),
            1.0 / cfg.theta_samples));
    }
  }

  TapeLoss out;
  out.breakdown.beta = cfg.beta;
  out.breakdown.margin = cfg.margin;
  out.breakdown.kl_per_layer.assign(T + 1, 0.0);

  // batch mean over non-empty documents; each per-sample term already
  // carries the 1/S factor
  const double batch_norm =
      nll_terms.empty() ? 1.0 : cfg.theta_samples / static_cast<double>(nll_terms.size());

  std::vector<ad::Var> total_terms;
  if (!nll_terms.empty()) {
    ad::Var nll = tape.scale(tape.add(nll_terms), batch_norm);
    out.breakdown.neg_log_likelihood = nll->value(0, 0);
    total_terms.push_back(nll);
    for (int t = 1; t <= T; ++t) {
      ad::Var kl = tape.scale(tape.add(kl_terms[t]), batch_norm);
      out.breakdown.kl_per_layer[t] = kl->value(0, 0);
      total_terms.push_back(kl);
    }
  }

  if (tree && cfg.beta != 0.0) {
    auto children = tree_children_for_model(*tree, params);
    std::vector<ad::Var> prior_terms;
    int skipped_total = 0;
    for (int t = 1; t <= T; ++t) {
      int skipped = 0;
      prior_terms.push_back(tape.margin_prior_layer(
          tp.mean[t - 1], tp.log_var[t - 1], tp.mean[t], tp.log_var[t], children[t - 1],
          cfg.margin, cfg.gamma_threshold, cfg.literal_hinge, &skipped));
      skipped_total += skipped;
    }
    ad::Var prior = tape.add(prior_terms);
    out.breakdown.prior_loss = prior->value(0, 0);
    out.breakdown.skipped_childless = skipped_total;
    total_terms.push_back(tape.scale(prior, cfg.beta));
  }

  if (total_terms.empty()) total_terms.push_back(tape.constant(0.0));
  out.total = tape.add(total_terms);
  out.breakdown.total = out.total->value(0, 0);
  if (!std::isfinite(out.breakdown.total))
    throw std::runtime_error("nonfinite training loss");
  return out;
}

}  // namespace

LossBreakdown elbo_loss(const ModelParams& params, const SparseCorpus& corpus,
                        const std::vector<int>& batch, std::mt19937_64& rng,
                        const ObjectiveConfig& cfg) {
  if (batch.empty()) throw std::runtime_error("elbo_loss: empty batch");
  ad::Tape tape;
  TapeParams tp = lift_params(tape, params, /*requires_grad=*/false);
  ObjectiveConfig no_prior = cfg;
  no_prior.beta = 0.0;
  TapeLoss loss = build_loss(tape, params, tp, corpus, batch, nullptr, no_prior, rng);
  return loss.breakdown;
}

std::pair<LossBreakdown, GradientSet> total_loss_and_gradients(
    ModelParams& params, const SparseCorpus& corpus, const std::vector<int>& batch,
    const TopicTree* tree, const ObjectiveConfig& cfg, std::mt19937_64& rng) {
  ad::Tape tape;
  TapeParams tp = lift_params(tape, params, /*requires_grad=*/true);
  TapeLoss loss = build_loss(tape, params, tp, corpus, batch, tree, cfg, rng);
  tape.backward(loss.total);

  GradientSet grads;
  std::vector<ad::Var> lifted;
  for (const auto& group :
       {&tp.mean, &tp.log_var, &tp.w1, &tp.b1, &tp.skip_proj, &tp.w2, &tp.b2, &tp.w3, &tp.b3})
    for (const auto& v : *group)
      if (v) lifted.push_back(v);
  lifted.push_back(tp.log_gamma_shape);

  auto trainables = params.trainables();
  if (lifted.size() != trainables.size())
    throw std::runtime_error("gradient bookkeeping mismatch");
  grads.grads.reserve(lifted.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    if (!lifted[i]->grad.allFinite())
      throw std::runtime_error("nonfinite gradient for tensor " + trainables[i]->name);
    grads.grads.push_back(lifted[i]->grad);
  }
  return {loss.breakdown, grads};
}

LossBreakdown total_loss(ModelParams& params, const SparseCorpus& corpus,
                         const std::vector<int>& batch, const TopicTree* tree,
                         const ObjectiveConfig& cfg, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  ad::Tape tape;
  TapeParams tp = lift_params(tape, params, /*requires_grad=*/false);
  TapeLoss loss = build_loss(tape, params, tp, corpus, batch, tree, cfg, rng);
  return loss.breakdown;
}

void adam_step(ModelParams& params, const GradientSet& grads, const AdamConfig& cfg, long step) {
  auto trainables = params.trainables();
  if (grads.grads.size() != trainables.size())
    throw std::runtime_error("adam_step: gradient set shape mismatch");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < trainables.size(); ++i) {
    ParamTensor& t = *trainables[i];
    const Eigen::MatrixXd& g = grads.grads[i];
    if (t.adam_m.size() == 0) t.init_opt_state();
    t.adam_m = cfg.beta1 * t.adam_m + (1.0 - cfg.beta1) * g;
    t.adam_v = cfg.beta2 * t.adam_v.array().matrix() +
               (1.0 - cfg.beta2) * g.array().square().matrix();
    const Eigen::ArrayXXd m_hat = t.adam_m.array() / bc1;
    const Eigen::ArrayXXd v_hat = t.adam_v.array() / bc2;
    t.value.array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
  }
}

}  // namespace topicnet
