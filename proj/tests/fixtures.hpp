// Shared fixtures: synthetic corpora drawn from a known generating model,
// small taxonomies, and scratch-file helpers.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "topicnet/corpus.hpp"
#include "topicnet/model.hpp"
#include "topicnet/taxonomy.hpp"

namespace fixtures {

// Ancestral sample from the generative side of a model: gamma chain from the
// top layer down, Poisson emission at the bottom. Returns the corpus plus the
// bottom-layer activations actually used per document, so the generator's own
// held-out rates are available to evaluation oracles.
struct GeneratedCorpus {
  topicnet::SparseCorpus corpus;
  std::vector<Eigen::VectorXd> theta1;  // per-document bottom activations
};

// top_concentration == 0 draws each document's top activations from the
// model's own gamma prior; a positive value instead draws a sparse
// Dirichlet(alpha)-style mixture scaled to the same expected total mass,
// giving documents heterogeneous topic usage (the prior's large shapes make
// every document nearly the same mixture, which a unigram model matches).
inline GeneratedCorpus sample_corpus(const topicnet::ModelParams& params, int num_docs,
                                     std::uint64_t seed, double top_concentration = 0.0) {
  std::mt19937_64 rng(seed);
  const int T = params.depth();
  std::vector<Eigen::MatrixXd> phi(T + 1);
  for (int t = 1; t <= T; ++t) phi[t] = topicnet::compute_phi(params, t);
  const Eigen::VectorXd top_shape = params.gamma_shape();

  GeneratedCorpus out;
  out.corpus.vocab_size = params.vocab_size();
  out.corpus.docs.resize(num_docs);
  out.theta1.resize(num_docs);
  for (int d = 0; d < num_docs; ++d) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(params.layer_sizes[T]);
    if (top_concentration > 0.0) {
      const double total_mass = top_shape.sum() / params.scale_c;
      std::gamma_distribution<double> g(top_concentration, 1.0);
      for (int k = 0; k < theta.size(); ++k) theta[k] = g(rng);
      const double sum = theta.sum();
      if (sum > 0.0) theta *= total_mass / sum;
    } else {
      for (int k = 0; k < theta.size(); ++k) {
        std::gamma_distribution<double> g(top_shape[k], 1.0 / params.scale_c);
        theta[k] = g(rng);
      }
    }
    for (int t = T - 1; t >= 1; --t) {
      Eigen::VectorXd shape = phi[t + 1] * theta;
      theta = Eigen::VectorXd::Zero(params.layer_sizes[t]);
      for (int k = 0; k < theta.size(); ++k) {
        if (shape[k] <= 0.0) continue;
        std::gamma_distribution<double> g(shape[k], 1.0 / params.scale_c);
        theta[k] = g(rng);
      }
    }
    out.theta1[d] = theta;
    Eigen::VectorXd rate = phi[1] * theta;
    for (int v = 0; v < params.vocab_size(); ++v) {
      if (rate[v] <= 0.0) continue;
      std::poisson_distribution<long> pois(rate[v]);
      long c = pois(rng);
      if (c > 0) out.corpus.docs[d].emplace_back(v, static_cast<double>(c));
    }
  }
  return out;
}

// A generating model with well-separated topics: each bottom topic
// concentrates on its own slice of the vocabulary, upper layers group
// neighboring topics. mean_doc_len controls the expected token count.
inline topicnet::ModelParams make_generator(const std::vector<int>& layer_sizes, int embed_dim,
                                            std::uint64_t seed, double mean_doc_len) {
  std::vector<int> hidden(layer_sizes.size(), 8);
  topicnet::ModelParams params = topicnet::init_params(layer_sizes, hidden, embed_dim, seed);
  const int T = params.depth();
  // Spread the means so the softmax kernel produces peaked, distinct columns:
  // child i of layer t sits near (scaled) position of its block parent.
  for (int t = 0; t <= T; ++t) {
    const int K = params.layer_sizes[t];
    for (int k = 0; k < K; ++k) {
      const double angle = 2.0 * M_PI * (k + 0.5) / K;
      params.mean[t].value(k, 0) = 3.0 * std::cos(angle);
      params.mean[t].value(k, 1 % params.embed_dim) = 3.0 * std::sin(angle);
      params.log_var[t].value.row(k).setConstant(std::log(0.3));
    }
  }
  const int K_T = params.layer_sizes[T];
  params.log_gamma_shape.value.setConstant(std::log(mean_doc_len * params.scale_c / K_T));
  return params;
}

inline std::vector<std::pair<std::string, std::string>> chain_edges() {
  // a <- b <- c <- d (child, parent)
  return {{"a", "b"}, {"b", "c"}, {"c", "d"}};
}

// The canine fragment used by the reattachment fixture: "dog" sits two hops
// below "mammal"; truncating above "canine" must reattach "dog" to "animal"'s
// kept subtree at the cut.
inline std::vector<std::pair<std::string, std::string>> canine_edges() {
  return {{"mammal", "animal"}, {"bird", "animal"}, {"canine", "mammal"},
          {"feline", "mammal"}, {"dog", "canine"},  {"cat", "feline"},
          {"sparrow", "bird"}};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("topicnet-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
