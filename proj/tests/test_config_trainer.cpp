#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "topicnet/config.hpp"
#include "topicnet/trainer.hpp"

using namespace topicnet;

namespace {
SparseCorpus small_corpus(std::uint64_t seed = 1) {
  // a few dozen docs over a 6-word vocabulary, enough for a smoke run
  fixtures::GeneratedCorpus gen =
      fixtures::sample_corpus(fixtures::make_generator({6, 3, 2}, 2, seed, 12.0), 24, seed + 1);
  return gen.corpus;
}

RunConfig smoke_config(const std::string& out_dir) {
  RunConfig cfg;
  cfg.layer_sizes = {3, 2};
  cfg.embed_dim = 2;
  cfg.hidden = 4;
  cfg.batch_size = 8;
  cfg.epochs = 4;
  cfg.seed = 5;
  cfg.lr = 0.02;
  cfg.out_dir = out_dir;
  return cfg;
}
}  // namespace

TEST_CASE("config file parsing, overrides, and validation") {
  fixtures::TempDir tmp("cfg");
  fixtures::write_text(tmp.file("run.cfg"),
                       "corpus_path = data.uci\n"
                       "vocab_path = vocab.txt\n"
                       "# a comment\n"
                       "layer_sizes = 16,8\n"
                       "lr = 0.005\n"
                       "mode = gauss-sawetm\n");
  RunConfig cfg = RunConfig::load(tmp.file("run.cfg"));
  CHECK(cfg.corpus_path == "data.uci");
  CHECK(cfg.layer_sizes == std::vector<int>{16, 8});
  CHECK(cfg.lr == 0.005);
  cfg.apply("lr", "0.5");
  CHECK(cfg.lr == 0.5);

  cfg.mode = "topicnet";  // taxonomy now required
  CHECK_THROWS(cfg.validate());
  cfg.taxonomy_path = "edges.tsv";
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config hash is stable under key order and sensitive to values") {
  RunConfig a, b;
  a.corpus_path = b.corpus_path = "x.uci";
  a.lr = b.lr = 0.01;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.lr = 0.011;
  CHECK(a.hash() != b.hash());
  b.lr = 0.01;
  b.seed = a.seed + 1;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("smoke training run decreases the loss and logs every step") {
  fixtures::TempDir tmp("train");
  SparseCorpus corpus = small_corpus();
  RunConfig cfg = smoke_config(tmp.dir());
  ModelParams params = init_params({6, 3, 2}, {4, 4, 4}, 2, cfg.seed);

  TrainOptions opts;
  opts.log_path = tmp.file("log.jsonl");
  opts.checkpoint_path = tmp.file("ckpt.json");
  opts.checkpoint_every = 100;
  long steps_seen = 0;
  opts.on_step = [&](long, const LossBreakdown& b) {
    ++steps_seen;
    CHECK(std::isfinite(b.total));
    for (size_t t = 1; t < b.kl_per_layer.size(); ++t) CHECK(b.kl_per_layer[t] >= -1e-6);
  };
  TrainResult res = train(params, corpus, nullptr, cfg, opts);
  CHECK(res.steps == steps_seen);
  CHECK(res.last_loss < res.first_loss);

  // one JSONL line per step
  std::ifstream log(tmp.file("log.jsonl"));
  long lines = 0;
  std::string line;
  while (std::getline(log, line))
    if (!line.empty()) ++lines;
  CHECK(lines == res.steps);

  Checkpoint ck = load_checkpoint(tmp.file("ckpt.json"));
  CHECK(ck.step == res.steps);
  CHECK(ck.config_hash == cfg.hash());
}

TEST_CASE("training is seed-deterministic end to end") {
  fixtures::TempDir tmp("det");
  SparseCorpus corpus = small_corpus();
  RunConfig cfg = smoke_config(tmp.dir());
  TrainOptions opts;  // no files
  TrainResult a = train(init_params({6, 3, 2}, {4, 4, 4}, 2, cfg.seed), corpus, nullptr, cfg, opts);
  TrainResult b = train(init_params({6, 3, 2}, {4, 4, 4}, 2, cfg.seed), corpus, nullptr, cfg, opts);
  CHECK(a.last_loss == b.last_loss);
  CHECK(a.params.mean[1].value == b.params.mean[1].value);

  cfg.seed = 6;
  TrainResult c = train(init_params({6, 3, 2}, {4, 4, 4}, 2, 5), corpus, nullptr, cfg, opts);
  CHECK(a.last_loss != c.last_loss);
}

TEST_CASE("resuming reproduces the uninterrupted loss trace") {
  fixtures::TempDir tmp("resume");
  SparseCorpus corpus = small_corpus();
  RunConfig cfg = smoke_config(tmp.dir());
  cfg.epochs = 2;

  // uninterrupted reference run over 2 epochs
  std::vector<double> full_trace;
  {
    TrainOptions opts;
    opts.on_step = [&](long, const LossBreakdown& b) { full_trace.push_back(b.total); };
    RunConfig two = cfg;
    train(init_params({6, 3, 2}, {4, 4, 4}, 2, cfg.seed), corpus, nullptr, two, opts);
  }

  // first epoch only, checkpointed
  const long steps_per_epoch = static_cast<long>((corpus.num_docs() + cfg.batch_size - 1) / cfg.batch_size);
  TrainOptions first;
  first.checkpoint_path = tmp.file("ckpt.json");
  first.checkpoint_every = 1;
  first.max_steps = steps_per_epoch;
  train(init_params({6, 3, 2}, {4, 4, 4}, 2, cfg.seed), corpus, nullptr, cfg, first);

  // resume and collect the second-epoch trace
  Checkpoint ck = load_checkpoint(tmp.file("ckpt.json"));
  std::vector<double> resumed;
  TrainOptions second;
  second.resume_step = ck.step;
  second.on_step = [&](long, const LossBreakdown& b) { resumed.push_back(b.total); };
  train(ck.params, corpus, nullptr, cfg, second);

  REQUIRE(full_trace.size() == static_cast<size_t>(2 * steps_per_epoch));
  REQUIRE(resumed.size() == static_cast<size_t>(steps_per_epoch));
  for (long i = 0; i < steps_per_epoch; ++i)
    CHECK(resumed[i] == doctest::Approx(full_trace[steps_per_epoch + i]).epsilon(1e-12));
}

TEST_CASE("canonical form orders keys deterministically") {
  RunConfig cfg;
  cfg.corpus_path = "c";
  const std::string canon = cfg.canonical();
  std::istringstream in(canon);
  std::string prev, line;
  while (std::getline(in, line)) {
    CHECK(prev < line);
    prev = line;
  }
  CHECK(canon.find("lr=") != std::string::npos);
  CHECK(canon.find("heldout=") != std::string::npos);
}
