#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace topicnet {

struct Vocabulary {
  std::vector<std::string> terms;
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(terms.size()); }
  bool contains(const std::string& term) const { return index.count(term) > 0; }

  static Vocabulary load(const std::string& path);  // one term per line, line number = id
  static Vocabulary from_terms(std::vector<std::string> terms);
};

// One document as sorted unique (word id, count) pairs.
using Document = std::vector<std::pair<int, double>>;

enum class CorpusFormat { UciBow, TripletTsv };

struct SparseCorpus {
  std::vector<Document> docs;
  int vocab_size = 0;

  int num_docs() const { return static_cast<int>(docs.size()); }
  double total_tokens() const;
  double doc_tokens(int doc) const;

  // Throws std::runtime_error with a line number on malformed input, an
  // out-of-range word id, or a nonpositive count.
  static SparseCorpus load(const std::string& path, CorpusFormat format, int vocab_size);
  void write(const std::string& path, CorpusFormat format) const;

  void validate() const;
};

struct HeldoutSplit {
  SparseCorpus train;
  SparseCorpus test;
  std::uint64_t seed = 0;
};

// Per-token Bernoulli assignment to the training side with probability
// train_fraction. Token counts are conserved per (doc, word).
HeldoutSplit split_tokens(const SparseCorpus& corpus, double train_fraction, std::uint64_t seed);

// One epoch of document-index batches; the last batch may be smaller.
std::vector<std::vector<int>> minibatches(int num_docs, int batch_size, std::uint64_t seed,
                                          bool shuffle);

}  // namespace topicnet
