#include <doctest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "topicnet/corpus.hpp"

using namespace topicnet;

TEST_CASE("UCI bag-of-words round trip") {
  fixtures::TempDir tmp("corpus");
  // header: D, W, NNZ on three lines, then docId wordId count (1-based ids)
  fixtures::write_text(tmp.file("c.uci"), "2\n4\n3\n1 1 2\n1 3 1\n2 4 5\n");
  SparseCorpus c = SparseCorpus::load(tmp.file("c.uci"), CorpusFormat::UciBow, 4);
  REQUIRE(c.num_docs() == 2);
  CHECK(c.total_tokens() == 8.0);
  CHECK(c.docs[0] == Document{{0, 2.0}, {2, 1.0}});
  CHECK(c.docs[1] == Document{{3, 5.0}});

  c.write(tmp.file("out.uci"), CorpusFormat::UciBow);
  SparseCorpus back = SparseCorpus::load(tmp.file("out.uci"), CorpusFormat::UciBow, 4);
  CHECK(back.docs == c.docs);
}

TEST_CASE("triplet TSV round trip") {
  fixtures::TempDir tmp("corpus");
  fixtures::write_text(tmp.file("c.tsv"), "0\t2\t3\n1\t0\t1\n1\t1\t4\n");
  SparseCorpus c = SparseCorpus::load(tmp.file("c.tsv"), CorpusFormat::TripletTsv, 3);
  REQUIRE(c.num_docs() == 2);
  CHECK(c.docs[0] == Document{{2, 3.0}});
  CHECK(c.docs[1] == Document{{0, 1.0}, {1, 4.0}});
  c.write(tmp.file("out.tsv"), CorpusFormat::TripletTsv);
  CHECK(SparseCorpus::load(tmp.file("out.tsv"), CorpusFormat::TripletTsv, 3).docs == c.docs);
}

TEST_CASE("malformed input reports the offending line") {
  fixtures::TempDir tmp("corpus");
  fixtures::write_text(tmp.file("bad.uci"), "1\n2\n2\n1 1 1\n1 9 1\n");
  try {
    SparseCorpus::load(tmp.file("bad.uci"), CorpusFormat::UciBow, 2);
    FAIL("expected an out-of-range error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 5") != std::string::npos);
    CHECK(msg.find("word id out of range") != std::string::npos);
  }

  fixtures::write_text(tmp.file("neg.tsv"), "0\t1\t-2\n");
  CHECK_THROWS(SparseCorpus::load(tmp.file("neg.tsv"), CorpusFormat::TripletTsv, 2));
}

TEST_CASE("vocabulary rejects duplicate terms and maps ids by line") {
  fixtures::TempDir tmp("vocab");
  fixtures::write_text(tmp.file("v.txt"), "alpha\nbeta\ngamma\n");
  Vocabulary v = Vocabulary::load(tmp.file("v.txt"));
  CHECK(v.size() == 3);
  CHECK(v.index.at("beta") == 1);
  CHECK_THROWS(Vocabulary::from_terms({"x", "y", "x"}));
}

TEST_CASE("held-out split conserves tokens and is seed-deterministic") {
  SparseCorpus c;
  c.vocab_size = 5;
  c.docs = {{{0, 10.0}, {2, 4.0}}, {{1, 7.0}, {4, 1.0}}, {{3, 20.0}}};

  HeldoutSplit s1 = split_tokens(c, 0.8, 99);
  HeldoutSplit s2 = split_tokens(c, 0.8, 99);
  CHECK(s1.train.docs == s2.train.docs);
  CHECK(s1.test.docs == s2.test.docs);

  // per-(doc, word) conservation
  for (int d = 0; d < c.num_docs(); ++d) {
    std::map<int, double> total;
    for (auto& [w, n] : s1.train.docs[d]) total[w] += n;
    for (auto& [w, n] : s1.test.docs[d]) total[w] += n;
    std::map<int, double> orig(c.docs[d].begin(), c.docs[d].end());
    CHECK(total == orig);
  }

  HeldoutSplit s3 = split_tokens(c, 0.8, 100);
  CHECK(s1.train.docs != s3.train.docs);  // different seed reshuffles tokens
}

TEST_CASE("split fraction concentrates around its mean") {
  SparseCorpus c;
  c.vocab_size = 1;
  c.docs = {{{0, 100000.0}}};
  HeldoutSplit s = split_tokens(c, 0.8, 7);
  const double train_frac = s.train.total_tokens() / 100000.0;
  // binomial(1e5, 0.8) std is ~0.00126; allow 5 sigma
  CHECK(train_frac == doctest::Approx(0.8).epsilon(0.01));
}

TEST_CASE("minibatches cover every document exactly once") {
  auto batches = minibatches(10, 4, 5, true);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[2].size() == 2);
  std::set<int> seen;
  for (auto& b : batches) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 10);

  CHECK(minibatches(10, 4, 5, true) == batches);            // deterministic
  CHECK(minibatches(10, 4, 6, true) != batches);            // seed-sensitive
  CHECK(minibatches(4, 2, 0, false)[0] == std::vector<int>{0, 1});  // no shuffle
}
