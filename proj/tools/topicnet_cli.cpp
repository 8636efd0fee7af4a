// Command-line front end: build-tree, train, eval, export.
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "topicnet/config.hpp"
#include "topicnet/corpus.hpp"
#include "topicnet/evaluation.hpp"
#include "topicnet/model.hpp"
#include "topicnet/taxonomy.hpp"
#include "topicnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace topicnet;

namespace {

// Thrown for bad user inputs (exit 1); anything else is a runtime failure (exit 2).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CorpusFormat parse_format(const std::string& f) {
  if (f == "uci-bow") return CorpusFormat::UciBow;
  if (f == "triplet-tsv") return CorpusFormat::TripletTsv;
  throw ValidationError("unknown corpus format: " + f);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got: " + kv);
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TopicTree resolve_tree(const RunConfig& cfg, const Vocabulary& vocab) {
  if (!cfg.tree_json_path.empty()) return TopicTree::from_json(read_file(cfg.tree_json_path));
  if (cfg.taxonomy_path.empty()) throw ValidationError("tree requested but no taxonomy_path/tree_json_path");
  TopicTree tree = top_down_truncate(HypernymGraph::load(cfg.taxonomy_path), cfg.tree_depth);
  return down_top_restrict(tree, vocab);
}

// Latent widths K_1..K_T: explicit config wins, then tree, then the deep default.
std::vector<int> resolve_layer_sizes(const RunConfig& cfg, const TopicTree* tree) {
  if (tree) {
    auto sizes = tree->layer_sizes();
    std::vector<int> latent(sizes.begin() + 1, sizes.end());
    if (!cfg.layer_sizes.empty() && cfg.layer_sizes != latent)
      throw ValidationError("layer_sizes in config disagree with the tree");
    return latent;
  }
  if (!cfg.layer_sizes.empty()) return cfg.layer_sizes;
  return {256, 224, 192, 160, 128, 112, 96, 80, 64, 56, 48, 40, 32, 16, 8};
}

ModelParams init_from_config(const RunConfig& cfg, int vocab_size, const TopicTree* tree) {
  std::vector<int> layers{vocab_size};
  for (int k : resolve_layer_sizes(cfg, tree)) layers.push_back(k);
  std::vector<int> hidden(layers.size(), cfg.hidden);
  ModelParams params = init_params(layers, hidden, cfg.embed_dim, cfg.seed);
  params.scale_c = cfg.scale_c;
  return params;
}

int cmd_build_tree(const std::string& edges_path, const std::string& vocab_path, int depth,
                   const std::string& out_path) {
  Vocabulary vocab = Vocabulary::load(vocab_path);
  TopicTree tree = top_down_truncate(HypernymGraph::load(edges_path), depth);
  tree = down_top_restrict(tree, vocab);
  tree.validate();
  for (const auto& w : tree.warnings) std::cerr << "warning: " << w << "\n";
  auto sizes = tree.layer_sizes();
  std::cout << "vocabulary intersection: " << sizes[0] << " of " << vocab.size() << " terms\n";
  std::cout << "layer widths (words..root): [";
  for (size_t i = 0; i < sizes.size(); ++i) std::cout << (i ? "," : "") << sizes[i];
  std::cout << "]\n";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << tree.to_json() << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_path) {
  Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
  SparseCorpus corpus =
      SparseCorpus::load(cfg.corpus_path, parse_format(cfg.corpus_format), vocab.size());

  fs::create_directories(cfg.out_dir);
  std::optional<TopicTree> tree;
  if (cfg.model_mode() == ModelMode::TopicNet) {
    tree = resolve_tree(cfg, vocab);
    std::ofstream tf(cfg.out_dir + "/tree.json");
    tf << tree->to_json() << "\n";
  }

  SparseCorpus train_corpus = corpus;
  if (cfg.heldout) train_corpus = split_tokens(corpus, cfg.train_fraction, cfg.seed).train;

  ModelParams params = init_from_config(cfg, vocab.size(), tree ? &*tree : nullptr);
  TrainOptions opts;
  opts.log_path = cfg.out_dir + "/train_log.jsonl";
  opts.checkpoint_path = cfg.out_dir + "/checkpoint.json";
  opts.checkpoint_every = cfg.checkpoint_every;

  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    if (ckpt.config_hash != cfg.hash())
      throw ValidationError("checkpoint config hash " + ckpt.config_hash +
                            " does not match current config " + cfg.hash());
    params = std::move(ckpt.params);
    opts.resume_step = ckpt.step;
    std::cout << "resuming from step " << ckpt.step << "\n";
  }

  std::cout << "config hash: " << cfg.hash() << "\n";
  TrainResult result = train(std::move(params), train_corpus, tree ? &*tree : nullptr, cfg, opts);
  std::cout << "steps: " << result.steps << "  loss: " << result.first_loss << " -> "
            << result.last_loss << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& what) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
  SparseCorpus corpus =
      SparseCorpus::load(cfg.corpus_path, parse_format(cfg.corpus_format), vocab.size());
  if (ckpt.params.vocab_size() != vocab.size())
    throw ValidationError("checkpoint vocabulary size " +
                          std::to_string(ckpt.params.vocab_size()) +
                          " does not match corpus vocabulary " + std::to_string(vocab.size()));
  fs::create_directories(cfg.out_dir);
  const std::string& hash = ckpt.config_hash;

  if (what == "ppl") {
    HeldoutSplit split = split_tokens(corpus, cfg.train_fraction, cfg.seed);
    std::mt19937_64 rng(cfg.seed);
    double ppl = heldout_perplexity(ckpt.params, split, cfg.s_eval, rng);
    nlohmann::ordered_json j{{"config_hash", hash},
                             {"perplexity", ppl},
                             {"eval_samples", cfg.s_eval},
                             {"train_fraction", cfg.train_fraction},
                             {"seed", cfg.seed}};
    std::ofstream out(cfg.out_dir + "/perplexity.json");
    out << j.dump(2) << "\n";
    std::cout << "held-out perplexity: " << ppl << "\n";
  } else if (what == "topics") {
    std::optional<TopicTree> tree;
    if (!cfg.tree_json_path.empty() || !cfg.taxonomy_path.empty()) tree = resolve_tree(cfg, vocab);
    TopicReport report = topic_report(ckpt.params, corpus, tree ? &*tree : nullptr);
    std::ofstream out(cfg.out_dir + "/topics.json");
    out << report.to_json(vocab, hash) << "\n";
    std::cout << report.topics.size() << " topics written to " << cfg.out_dir << "/topics.json\n";
  } else if (what == "alignment") {
    TopicTree tree = resolve_tree(cfg, vocab);
    std::mt19937_64 rng(cfg.seed);
    AlignmentReport rep = taxonomy_alignment(ckpt.params, tree, cfg.gamma_threshold, rng);
    nlohmann::ordered_json j{{"config_hash", hash},
                             {"edge_mean", rep.edge_mean},
                             {"non_edge_mean", rep.non_edge_mean},
                             {"edge_encapsulation_rate", rep.edge_encapsulation_rate},
                             {"non_edge_encapsulation_rate", rep.non_edge_encapsulation_rate},
                             {"num_edges", rep.num_edges},
                             {"num_non_edges", rep.num_non_edges}};
    std::ofstream out(cfg.out_dir + "/alignment.json");
    out << j.dump(2) << "\n";
    std::cout << "edge mean d_gamma " << rep.edge_mean << " vs non-edge " << rep.non_edge_mean
              << "\n";
  } else if (what == "features") {
    Eigen::MatrixXd feats = export_document_features(ckpt.params, corpus);
    std::string path = cfg.out_dir + "/features.tsv";
    std::ofstream out(path);
    out << "# config_hash=" << hash << "\n";
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
      for (Eigen::Index j = 0; j < feats.cols(); ++j) out << (j ? "\t" : "") << feats(i, j);
      out << "\n";
    }
    std::cout << feats.rows() << " x " << feats.cols() << " feature matrix written to " << path
              << "\n";
  } else {
    throw ValidationError("eval target must be one of ppl|topics|alignment|features, got: " + what);
  }
  return 0;
}

int cmd_export(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& what,
               const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
  if (ckpt.params.vocab_size() != vocab.size())
    throw ValidationError("checkpoint vocabulary size does not match vocab file");

  if (what == "embeddings") {
    std::optional<TopicTree> tree;
    if (!cfg.tree_json_path.empty() || !cfg.taxonomy_path.empty()) tree = resolve_tree(cfg, vocab);
    export_embedding_means(ckpt.params, vocab, tree ? &*tree : nullptr, out_path,
                           ckpt.config_hash);
  } else if (what == "features") {
    SparseCorpus corpus =
        SparseCorpus::load(cfg.corpus_path, parse_format(cfg.corpus_format), vocab.size());
    Eigen::MatrixXd feats = export_document_features(ckpt.params, corpus);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "# config_hash=" << ckpt.config_hash << "\n";
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
      for (Eigen::Index j = 0; j < feats.cols(); ++j) out << (j ? "\t" : "") << feats(i, j);
      out << "\n";
    }
  } else {
    throw ValidationError("export target must be embeddings or features, got: " + what);
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical topic modeling with Gaussian concept embeddings"};
  app.require_subcommand(1);

  // build-tree
  std::string edges_path, vocab_path, tree_out = "tree.json";
  int depth = 3;
  auto* build = app.add_subcommand("build-tree", "Build a layered topic tree from hypernym edges");
  build->add_option("--edges", edges_path, "child<TAB>parent edge list")->required();
  build->add_option("--vocab", vocab_path, "vocabulary file, one term per line")->required();
  build->add_option("--depth", depth, "number of topic layers to keep");
  build->add_option("--out", tree_out, "output tree JSON path");

  // shared train/eval/export options
  std::string config_path, resume_path, checkpoint_path, what, out_path;
  std::vector<std::string> overrides;

  auto* tr = app.add_subcommand("train", "Train a model from a config file");
  tr->add_option("--config", config_path, "key=value run configuration");
  tr->add_option("--set", overrides, "override a config key (key=value), repeatable");
  tr->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--config", config_path, "key=value run configuration");
  ev->add_option("--set", overrides, "override a config key (key=value), repeatable");
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  ev->add_option("--what", what, "ppl|topics|alignment|features")->required();

  auto* ex = app.add_subcommand("export", "Export embeddings or document features");
  ex->add_option("--config", config_path, "key=value run configuration");
  ex->add_option("--set", overrides, "override a config key (key=value), repeatable");
  ex->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  ex->add_option("--what", what, "embeddings|features")->required();
  ex->add_option("--out", out_path, "output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_tree(edges_path, vocab_path, depth, tree_out);
    RunConfig cfg = load_config(config_path, overrides);
    if (tr->parsed()) return cmd_train(cfg, resume_path);
    if (ev->parsed()) return cmd_eval(cfg, checkpoint_path, what);
    if (ex->parsed()) return cmd_export(cfg, checkpoint_path, what, out_path);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
