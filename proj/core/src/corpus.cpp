#include "topicnet/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace topicnet {

namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ", line " + std::to_string(line) + ": " + msg);
}

void add_entry(std::map<std::pair<int, int>, double>& cells, const std::string& path, int line,
               int doc, int word, double count, int vocab_size) {
  if (word < 0 || word >= vocab_size)
    fail(path, line, "word id out of range: " + std::to_string(word) + " (V=" +
                         std::to_string(vocab_size) + ")");
  if (count <= 0) fail(path, line, "nonpositive count");
  cells[{doc, word}] += count;
}

}  // namespace

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    terms.push_back(line);
  }
  return from_terms(std::move(terms));
}

Vocabulary Vocabulary::from_terms(std::vector<std::string> terms) {
  Vocabulary v;
  v.terms = std::move(terms);
  if (v.terms.empty()) throw std::runtime_error("empty vocabulary");
  for (int i = 0; i < static_cast<int>(v.terms.size()); ++i) {
    if (!v.index.emplace(v.terms[i], i).second)
      throw std::runtime_error("duplicate vocabulary term: " + v.terms[i]);
  }
  return v;
}

double SparseCorpus::total_tokens() const {
  double total = 0.0;
  for (const auto& doc : docs)
    for (const auto& [id, count] : doc) total += count;
  return total;
}

double SparseCorpus::doc_tokens(int doc) const {
  double total = 0.0;
  for (const auto& [id, count] : docs[doc]) total += count;
  return total;
}

void SparseCorpus::validate() const {
  for (int d = 0; d < num_docs(); ++d) {
    int prev = -1;
    for (const auto& [id, count] : docs[d]) {
      if (id < 0 || id >= vocab_size)
        throw std::runtime_error("doc " + std::to_string(d) + ": word id out of range");
      if (id <= prev)
        throw std::runtime_error("doc " + std::to_string(d) + ": word ids not sorted unique");
      if (count <= 0) throw std::runtime_error("doc " + std::to_string(d) + ": nonpositive count");
      prev = id;
    }
  }
}

SparseCorpus SparseCorpus::load(const std::string& path, CorpusFormat format, int vocab_size) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  if (vocab_size < 1) throw std::runtime_error("vocab size must be >= 1");

  std::map<std::pair<int, int>, double> cells;
  int max_doc = -1;
  std::string line;
  int line_no = 0;

  if (format == CorpusFormat::UciBow) {
    // header: N, V, NNZ on three lines; then "docid wordid count" (1-indexed)
    long header[3];
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(in, line)) fail(path, line_no + 1, "truncated UCI header");
      ++line_no;
      std::istringstream ss(line);
      if (!(ss >> header[i])) fail(path, line_no, "malformed UCI header");
    }
    if (header[1] != vocab_size)
      fail(path, 2, "header vocab size " + std::to_string(header[1]) +
                        " does not match vocabulary (V=" + std::to_string(vocab_size) + ")");
    max_doc = static_cast<int>(header[0]) - 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      long doc, word;
      double count;
      if (!(ss >> doc >> word >> count)) fail(path, line_no, "malformed UCI entry");
      if (doc < 1 || doc > header[0]) fail(path, line_no, "doc id out of range");
      add_entry(cells, path, line_no, static_cast<int>(doc - 1), static_cast<int>(word - 1),
                count, vocab_size);
    }
  } else {
    // 0-indexed "doc_id\tword_id\tcount"
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      long doc, word;
      double count;
      if (!(ss >> doc >> word >> count)) fail(path, line_no, "malformed triplet entry");
      if (doc < 0) fail(path, line_no, "negative doc id");
      add_entry(cells, path, line_no, static_cast<int>(doc), static_cast<int>(word), count,
                vocab_size);
      max_doc = std::max(max_doc, static_cast<int>(doc));
    }
  }

  SparseCorpus corpus;
  corpus.vocab_size = vocab_size;
  corpus.docs.resize(max_doc + 1);
  for (const auto& [key, count] : cells) corpus.docs[key.first].emplace_back(key.second, count);
  corpus.validate();
  return corpus;
}

void SparseCorpus::write(const std::string& path, CorpusFormat format) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  if (format == CorpusFormat::UciBow) {
    long nnz = 0;
    for (const auto& doc : docs) nnz += static_cast<long>(doc.size());
    out << num_docs() << "\n" << vocab_size << "\n" << nnz << "\n";
    for (int d = 0; d < num_docs(); ++d)
      for (const auto& [id, count] : docs[d])
        out << (d + 1) << " " << (id + 1) << " " << count << "\n";
  } else {
    for (int d = 0; d < num_docs(); ++d)
      for (const auto& [id, count] : docs[d]) out << d << "\t" << id << "\t" << count << "\n";
  }
}

HeldoutSplit split_tokens(const SparseCorpus& corpus, double train_fraction, std::uint64_t seed) {
  if (corpus.num_docs() == 0) throw std::runtime_error("split_tokens: empty corpus");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::runtime_error("split_tokens: train_fraction must be in (0,1)");

  HeldoutSplit split;
  split.seed = seed;
  split.train.vocab_size = corpus.vocab_size;
  split.test.vocab_size = corpus.vocab_size;
  split.train.docs.resize(corpus.num_docs());
  split.test.docs.resize(corpus.num_docs());

  std::mt19937_64 rng(seed);
  for (int d = 0; d < corpus.num_docs(); ++d) {
    for (const auto& [id, count] : corpus.docs[d]) {
      const auto total = static_cast<long>(count);
      std::binomial_distribution<long> binom(total, train_fraction);
      const long to_train = binom(rng);
      if (to_train > 0) split.train.docs[d].emplace_back(id, static_cast<double>(to_train));
      if (total - to_train > 0)
        split.test.docs[d].emplace_back(id, static_cast<double>(total - to_train));
    }
  }
  return split;
}

std::vector<std::vector<int>> minibatches(int num_docs, int batch_size, std::uint64_t seed,
                                          bool shuffle) {
  if (batch_size < 1) throw std::runtime_error("minibatches: batch_size must be >= 1");
  std::vector<int> order(num_docs);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < num_docs; start += batch_size) {
    const int end = std::min(start + batch_size, num_docs);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace topicnet
