#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "topicnet/evaluation.hpp"

using namespace topicnet;

namespace {
SparseCorpus tiny(int vocab, std::vector<Document> docs) {
  SparseCorpus c;
  c.vocab_size = vocab;
  c.docs = std::move(docs);
  return c;
}
}  // namespace

TEST_CASE("uniform rates give perplexity exactly V") {
  const int V = 17;
  SparseCorpus corpus = tiny(V, {{{0, 5.0}, {3, 2.0}}, {{8, 1.0}, {16, 4.0}}});
  HeldoutSplit split = split_tokens(corpus, 0.5, 3);
  auto uniform = [&](int, int) { return Eigen::VectorXd::Constant(V, 1.0); };
  CHECK(perplexity_from_rates(split, 8, uniform) == doctest::Approx(double(V)).epsilon(1e-12));
}

TEST_CASE("rates proportional to the held-out counts beat uniform") {
  const int V = 10;
  SparseCorpus corpus = tiny(V, {{{1, 40.0}, {2, 40.0}}, {{7, 40.0}}});
  HeldoutSplit split = split_tokens(corpus, 0.5, 11);
  auto oracle = [&](int d, int) {
    Eigen::VectorXd r = Eigen::VectorXd::Constant(V, 1e-6);
    for (auto& [w, n] : split.test.docs[d]) r[w] = n;
    return r;
  };
  auto uniform = [&](int, int) { return Eigen::VectorXd::Constant(V, 1.0); };
  CHECK(perplexity_from_rates(split, 4, oracle) < perplexity_from_rates(split, 4, uniform));
}

TEST_CASE("documents without held-out tokens are skipped") {
  const int V = 4;
  HeldoutSplit split;
  split.train = tiny(V, {{{0, 3.0}}, {{1, 2.0}}});
  split.test = tiny(V, {{}, {{1, 6.0}}});
  auto uniform = [&](int, int) { return Eigen::VectorXd::Constant(V, 2.0); };
  CHECK(perplexity_from_rates(split, 2, uniform) == doctest::Approx(double(V)));
}

TEST_CASE("effective word distributions are probability vectors") {
  ModelParams p = init_params({6, 3, 2}, {4, 4, 4}, 2, 5);
  for (int t = 1; t <= 2; ++t)
    for (int k = 0; k < p.layer_sizes[t]; ++k) {
      Eigen::VectorXd w = effective_word_distribution(p, t, k);
      REQUIRE(w.size() == 6);
      CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK((w.array() >= 0.0).all());
    }
}

TEST_CASE("NPMI reaches 1 on perfect co-occurrence and 0 on independence") {
  // words 0 and 1 always appear together, never apart
  SparseCorpus perfect = tiny(4, {{{0, 1.0}, {1, 2.0}},
                                  {{0, 2.0}, {1, 1.0}},
                                  {{2, 1.0}},
                                  {{3, 1.0}}});
  CHECK(npmi_coherence({0, 1}, perfect) == doctest::Approx(1.0).epsilon(1e-12));

  // each of words 0 and 1 appears in half the docs, jointly in a quarter
  SparseCorpus indep = tiny(4, {{{0, 1.0}, {1, 1.0}},
                                {{0, 1.0}},
                                {{1, 1.0}},
                                {{2, 1.0}}});
  CHECK(npmi_coherence({0, 1}, indep) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("never co-occurring words score negative but finite") {
  // both words are frequent, so the single pseudo-document joint count sits
  // well below the independence level
  std::vector<Document> docs;
  for (int i = 0; i < 5; ++i) docs.push_back({{0, 1.0}});
  for (int i = 0; i < 5; ++i) docs.push_back({{1, 1.0}});
  SparseCorpus c = tiny(4, docs);
  const double v = npmi_coherence({0, 1}, c);
  CHECK(std::isfinite(v));
  CHECK(v < 0.0);
}

TEST_CASE("words absent from the reference are skipped and counted") {
  SparseCorpus c = tiny(5, {{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, 1.0}}});
  int skipped = 0;
  npmi_coherence({0, 1, 4}, c, &skipped);
  CHECK(skipped == 2);  // pairs (0,4) and (1,4)
}

TEST_CASE("diversity extremes") {
  std::vector<int> list(25);
  std::iota(list.begin(), list.end(), 0);
  std::vector<std::vector<int>> identical(4, list);
  CHECK(topic_diversity(identical) == doctest::Approx(0.25));  // 1/K with K=4

  std::vector<std::vector<int>> disjoint;
  for (int k = 0; k < 4; ++k) {
    std::vector<int> l(25);
    std::iota(l.begin(), l.end(), 25 * k);
    disjoint.push_back(l);
  }
  CHECK(topic_diversity(disjoint) == doctest::Approx(1.0));
}

TEST_CASE("document features have one row per document, all layers wide") {
  ModelParams p = init_params({6, 3, 2}, {4, 4, 4}, 2, 5);
  SparseCorpus c = tiny(6, {{{0, 2.0}}, {{3, 1.0}, {5, 2.0}}, {{1, 1.0}}});
  Eigen::MatrixXd f = export_document_features(p, c);
  CHECK(f.rows() == 3);
  CHECK(f.cols() == 3 + 2);
  CHECK((f.array() > 0.0).all());
  CHECK(export_document_features(p, c) == f);  // deterministic
}

TEST_CASE("topic report covers every topic and embeds the config hash") {
  ModelParams p = init_params({6, 3, 2}, {4, 4, 4}, 2, 5);
  SparseCorpus c = tiny(6, {{{0, 2.0}, {1, 1.0}}, {{3, 1.0}, {5, 2.0}}, {{1, 1.0}, {2, 2.0}}});
  TopicReport rep = topic_report(p, c, nullptr, 3, 5);
  CHECK(rep.topics.size() == 3 + 2);
  for (auto& t : rep.topics) {
    CHECK(t.top_words.size() == 3);
    CHECK(std::is_sorted(t.top_weights.rbegin(), t.top_weights.rend()));
  }
  Vocabulary vocab = Vocabulary::from_terms({"a", "b", "c", "d", "e", "f"});
  const std::string json = rep.to_json(vocab, "feedc0de00112233");
  CHECK(json.find("feedc0de00112233") != std::string::npos);
}

TEST_CASE("alignment report compares tree edges against non-edges") {
  using E = std::pair<std::string, std::string>;
  std::vector<E> edges{{"t10", "t20"}, {"t11", "t20"}, {"t12", "t21"},
                       {"w0", "t10"},  {"w1", "t10"},  {"w2", "t11"},
                       {"w3", "t11"},  {"w4", "t12"},  {"w5", "t12"}};
  TopicTree tree = down_top_restrict(
      top_down_truncate(HypernymGraph::from_edges(edges), 2),
      Vocabulary::from_terms({"w0", "w1", "w2", "w3", "w4", "w5"}));
  ModelParams p = init_params({6, 3, 2}, {4, 4, 4}, 2, 5);
  std::mt19937_64 rng(8);
  AlignmentReport rep = taxonomy_alignment(p, tree, 2.0, rng, 200);
  CHECK(rep.num_edges > 0);
  CHECK(rep.num_non_edges > 0);
  CHECK(rep.edge_mean >= 0.0);
  CHECK(rep.non_edge_mean >= 0.0);
  CHECK(rep.edge_encapsulation_rate >= 0.0);
  CHECK(rep.edge_encapsulation_rate <= 1.0);
}
