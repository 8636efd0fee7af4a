#include "topicnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "topicnet/gaussian.hpp"

namespace topicnet {

double perplexity_from_rates(const HeldoutSplit& split, int num_samples,
                             const std::function<Eigen::VectorXd(int, int)>& rate_fn) {
  if (num_samples < 1) throw std::runtime_error("perplexity: need at least one sample");
  double log_sum = 0.0;
  double heldout_tokens = 0.0;
  for (int d = 0; d < split.test.num_docs(); ++d) {
    const Document& y = split.test.docs[d];
    if (y.empty()) continue;
    Eigen::VectorXd numer;
    double denom = 0.0;
    for (int s = 0; s < num_samples; ++s) {
      Eigen::VectorXd rate = rate_fn(d, s);
      if (numer.size() == 0)
        numer = rate;
      else
        numer += rate;
      denom += rate.sum();
    }
    for (const auto& [id, count] : y) {
      log_sum += count * std::log(numer(id) / denom);
      heldout_tokens += count;
    }
  }
  if (heldout_tokens == 0.0) throw std::runtime_error("perplexity: no held-out tokens");
  return std::exp(-log_sum / heldout_tokens);
}

double heldout_perplexity(const ModelParams& params, const HeldoutSplit& split, int num_samples,
                          std::mt19937_64& rng) {
  const Eigen::MatrixXd phi1 = compute_phi(params, 1);
  return perplexity_from_rates(split, num_samples, [&](int doc, int) {
    LatentState state = encode(params, split.train.docs[doc], /*sample=*/true, rng);
    return Eigen::VectorXd(phi1 * state.theta[1]);
  });
}

Eigen::VectorXd effective_word_distribution(const ModelParams& params, int layer, int topic) {
  if (layer < 1 || layer > params.depth())
    throw std::runtime_error("effective_word_distribution: layer out of range");
  Eigen::VectorXd col = compute_phi(params, layer).col(topic);
  for (int t = layer - 1; t >= 1; --t) col = compute_phi(params, t) * col;
  return col;
}

double npmi_coherence(const std::vector<int>& top_words, const SparseCorpus& reference,
                      int* skipped_pairs) {
  if (reference.num_docs() == 0) throw std::runtime_error("npmi: empty reference corpus");
  const double n_docs = reference.num_docs();

  // document frequencies
  std::unordered_map<int, double> df;
  std::unordered_map<long, double> joint;
  std::unordered_set<int> wanted(top_words.begin(), top_words.end());
  auto pair_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return static_cast<long>(a) * (1L << 31) + b;
  };
  for (const auto& doc : reference.docs) {
    std::vector<int> present;
    for (const auto& [id, count] : doc)
      if (wanted.count(id)) present.push_back(id);
    for (int id : present) df[id] += 1.0;
    for (std::size_t i = 0; i < present.size(); ++i)
      for (std::size_t j = i + 1; j < present.size(); ++j)
        joint[pair_key(present[i], present[j])] += 1.0;
  }

  double sum = 0.0;
  int pairs = 0, skipped = 0;
  for (std::size_t i = 0; i < top_words.size(); ++i) {
    for (std::size_t j = i + 1; j < top_words.size(); ++j) {
      const int a = top_words[i], b = top_words[j];
      if (df.find(a) == df.end() || df.find(b) == df.end()) {
        ++skipped;
        continue;
      }
      auto it = joint.find(pair_key(a, b));
      // one pseudo-document on never-co-occurring pairs keeps the log finite
      const double joint_count = it == joint.end() ? 1.0 : it->second;
      const double extra = it == joint.end() ? 1.0 : 0.0;
      const double p_ab = joint_count / (n_docs + extra);
      const double p_a = df[a] / n_docs;
      const double p_b = df[b] / n_docs;
      const double pmi = std::log(p_ab) - std::log(p_a) - std::log(p_b);
      sum += pmi / (-std::log(p_ab));
      ++pairs;
    }
  }
  if (skipped_pairs) *skipped_pairs = skipped;
  return pairs == 0 ? 0.0 : sum / pairs;
}

double topic_diversity(const std::vector<std::vector<int>>& top25_lists) {
  if (top25_lists.empty()) throw std::runtime_error("topic_diversity: no topics");
  // the standard metric uses 25-word lists; smaller vocabularies shorten
  // every list uniformly
  const std::size_t len = top25_lists.front().size();
  std::set<int> unique_words;
  for (const auto& list : top25_lists) {
    if (list.size() != len) throw std::runtime_error("topic_diversity: ragged top-word lists");
    unique_words.insert(list.begin(), list.end());
  }
  return static_cast<double>(unique_words.size()) /
         (static_cast<double>(len) * top25_lists.size());
}

AlignmentReport taxonomy_alignment(const ModelParams& params, const TopicTree& tree,
                                   double gamma_threshold, std::mt19937_64& rng,
                                   int non_edge_samples) {
  AlignmentReport report;
  const int T = tree.depth();

  auto child_row = [&](int t, int i) {
    // word-layer nodes map through vocabulary ids
    return (t == 0 && !tree.word_ids.empty()) ? tree.word_ids[i] : i;
  };
  auto d_gamma = [&](int t, int i, int j) {
    const int row = child_row(t, i);
    return thresholded_divergence_kl(
        gaussian_kl(params.mean[t].value.row(row), params.log_var[t].value.row(row),
                    params.mean[t + 1].value.row(j), params.log_var[t + 1].value.row(j)),
        gamma_threshold);
  };

  double edge_sum = 0.0;
  int edge_zero = 0;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < static_cast<int>(tree.layers[t].size()); ++i) {
      const double d = d_gamma(t, i, tree.parent[t][i]);
      edge_sum += d;
      if (d == 0.0) ++edge_zero;
      ++report.num_edges;
    }
  }

  double non_edge_sum = 0.0;
  int non_edge_zero = 0;
  std::uniform_int_distribution<int> layer_pick(0, T - 1);
  int attempts = 0;
  while (report.num_non_edges < non_edge_samples && attempts < 50 * non_edge_samples) {
    ++attempts;
    const int t = layer_pick(rng);
    const int nc = static_cast<int>(tree.layers[t].size());
    const int np = static_cast<int>(tree.layers[t + 1].size());
    if (nc < 2 || np < 1) continue;
    const int i = std::uniform_int_distribution<int>(0, nc - 1)(rng);
    const int j = std::uniform_int_distribution<int>(0, np - 1)(rng);
    if (tree.parent[t][i] == j) continue;
    const double d = d_gamma(t, i, j);
    non_edge_sum += d;
    if (d == 0.0) ++non_edge_zero;
    ++report.num_non_edges;
  }

  if (report.num_edges > 0) {
    report.edge_mean = edge_sum / report.num_edges;
    report.edge_encapsulation_rate = static_cast<double>(edge_zero) / report.num_edges;
  }
  if (report.num_non_edges > 0) {
    report.non_edge_mean = non_edge_sum / report.num_non_edges;
    report.non_edge_encapsulation_rate =
        static_cast<double>(non_edge_zero) / report.num_non_edges;
  }
  return report;
}

Eigen::MatrixXd export_document_features(const ModelParams& params, const SparseCorpus& corpus) {
  const int T = params.depth();
  int total_topics = 0;
  for (int t = 1; t <= T; ++t) total_topics += params.layer_sizes[t];
  Eigen::MatrixXd features(corpus.num_docs(), total_topics);
  std::mt19937_64 rng(0);  // unused in mean mode
  for (int d = 0; d < corpus.num_docs(); ++d) {
    LatentState state = encode(params, corpus.docs[d], /*sample=*/false, rng);
    int col = 0;
    for (int t = 1; t <= T; ++t) {
      features.row(d).segment(col, params.layer_sizes[t]) = state.theta[t].transpose();
      col += params.layer_sizes[t];
    }
  }
  return features;
}

TopicReport topic_report(const ModelParams& params, const SparseCorpus& reference,
                         const TopicTree* tree, int top_n, int diversity_top_n) {
  const int T = params.depth();
  TopicReport report;
  report.layer_coherence.assign(T + 1, 0.0);
  report.layer_diversity.assign(T + 1, 0.0);
  report.layer_quality.assign(T + 1, 0.0);

  for (int t = 1; t <= T; ++t) {
    std::vector<std::vector<int>> top25;
    double coherence_sum = 0.0;
    for (int k = 0; k < params.layer_sizes[t]; ++k) {
      const Eigen::VectorXd dist = effective_word_distribution(params, t, k);
      std::vector<int> order(dist.size());
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(),
                        order.begin() + std::min<std::size_t>(order.size(), diversity_top_n),
                        order.end(), [&](int a, int b) { return dist(a) > dist(b); });

      TopicSummary summary;
      summary.layer = t;
      summary.topic = k;
      if (tree) summary.concept_name = tree->layers[t][k];
      const int n = std::min<int>(top_n, static_cast<int>(order.size()));
      for (int i = 0; i < n; ++i) {
        summary.top_words.push_back(order[i]);
        summary.top_weights.push_back(dist(order[i]));
      }
      summary.coherence = npmi_coherence(summary.top_words, reference);
      coherence_sum += summary.coherence;
      report.topics.push_back(std::move(summary));

      if (static_cast<int>(order.size()) >= diversity_top_n)
        top25.emplace_back(order.begin(), order.begin() + diversity_top_n);
    }
    report.layer_coherence[t] = coherence_sum / params.layer_sizes[t];
    if (!top25.empty()) report.layer_diversity[t] = topic_diversity(top25);
    report.layer_quality[t] = topic_quality(report.layer_coherence[t], report.layer_diversity[t]);
  }
  return report;
}

std::string TopicReport::to_json(const Vocabulary& vocab, const std::string& config_hash) const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["layer_coherence"] = layer_coherence;
  j["layer_diversity"] = layer_diversity;
  j["layer_quality"] = layer_quality;
  nlohmann::ordered_json topics_json = nlohmann::ordered_json::array();
  for (const auto& topic : topics) {
    nlohmann::ordered_json tj;
    tj["layer"] = topic.layer;
    tj["topic"] = topic.topic;
    if (!topic.concept_name.empty()) tj["concept"] = topic.concept_name;
    std::vector<std::string> terms;
    for (int id : topic.top_words) terms.push_back(vocab.terms[id]);
    tj["top_words"] = terms;
    tj["top_word_ids"] = topic.top_words;
    tj["top_weights"] = topic.top_weights;
    tj["coherence"] = topic.coherence;
    topics_json.push_back(std::move(tj));
  }
  j["topics"] = std::move(topics_json);
  return j.dump(2);
}

void export_embedding_means(const ModelParams& params, const Vocabulary& vocab,
                            const TopicTree* tree, const std::string& path,
                            const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding export: " + path);
  out << "# config_hash=" << config_hash << "\n";
  for (int t = 0; t <= params.depth(); ++t) {
    for (int k = 0; k < params.layer_sizes[t]; ++k) {
      std::string concept_name;
      if (t == 0) {
        concept_name = k < vocab.size() ? vocab.terms[k] : "";
      } else if (tree && t <= tree->depth() &&
                 k < static_cast<int>(tree->layers[t].size())) {
        concept_name = tree->layers[t][k];
      }
      out << k << "\t" << t << "\t" << concept_name;
      for (int d = 0; d < params.embed_dim; ++d) out << "\t" << params.mean[t].value(k, d);
      out << "\n";
    }
  }
}

}  // namespace topicnet
