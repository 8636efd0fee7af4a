#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topicnet/corpus.hpp"
#include "topicnet/model.hpp"
#include "topicnet/taxonomy.hpp"

namespace topicnet {

// Per-held-out-word perplexity. For each document, S posterior theta samples
// are drawn conditioned on the training counts; rates are aggregated over
// samples before normalization. Documents without held-out tokens are
// skipped.
double heldout_perplexity(const ModelParams& params, const HeldoutSplit& split, int num_samples,
                          std::mt19937_64& rng);

// Same estimator with an arbitrary rate source: rate_fn(doc, s) returns the
// unnormalized rate vector of sample s for the given document. Used by the
// oracle fixtures.
double perplexity_from_rates(const HeldoutSplit& split, int num_samples,
                             const std::function<Eigen::VectorXd(int, int)>& rate_fn);

// Chained-product word distribution of topic k at layer t: column k of
// Phi^(1) Phi^(2) ... Phi^(t). Column-stochastic by composition.
Eigen::VectorXd effective_word_distribution(const ModelParams& params, int layer, int topic);

// Mean NPMI over unordered pairs of the top words, with document-frequency
// probabilities from the reference corpus. Pairs never co-occurring receive a
// single pseudo-document joint count so the log stays finite; pairs with a
// word absent from the reference are skipped and counted.
double npmi_coherence(const std::vector<int>& top_words, const SparseCorpus& reference,
                      int* skipped_pairs = nullptr);

// Fraction of unique words across the top-25 lists of all topics.
double topic_diversity(const std::vector<std::vector<int>>& top25_lists);

inline double topic_quality(double coherence, double diversity) { return coherence * diversity; }

struct AlignmentReport {
  double edge_mean = 0.0;      // mean d_gamma over (child, parent) tree edges
  double non_edge_mean = 0.0;  // mean over sampled non-edges
  double edge_encapsulation_rate = 0.0;
  double non_edge_encapsulation_rate = 0.0;
  int num_edges = 0;
  int num_non_edges = 0;
};

AlignmentReport taxonomy_alignment(const ModelParams& params, const TopicTree& tree,
                                   double gamma_threshold, std::mt19937_64& rng,
                                   int non_edge_samples = 2000);

// Rows = documents, columns = concatenated per-layer theta means (layers
// 1..T). Deterministic.
Eigen::MatrixXd export_document_features(const ModelParams& params, const SparseCorpus& corpus);

struct TopicSummary {
  int layer = 0;
  int topic = 0;
  std::string concept_name;  // empty without a tree
  std::vector<int> top_words;
  std::vector<double> top_weights;
  double coherence = 0.0;
};

struct TopicReport {
  std::vector<TopicSummary> topics;
  std::vector<double> layer_coherence;  // 1..T at index t
  std::vector<double> layer_diversity;
  std::vector<double> layer_quality;

  std::string to_json(const Vocabulary& vocab, const std::string& config_hash) const;
};

TopicReport topic_report(const ModelParams& params, const SparseCorpus& reference,
                         const TopicTree* tree, int top_n = 10, int diversity_top_n = 25);

// TSV of Gaussian means: id, layer, concept, mean components. First line is
// a "# config_hash=..." comment.
void export_embedding_means(const ModelParams& params, const Vocabulary& vocab,
                            const TopicTree* tree, const std::string& path,
                            const std::string& config_hash = "");

}  // namespace topicnet
