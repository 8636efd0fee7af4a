#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace topicnet {

enum class ModelMode { GaussSawEtm, TopicNet };

// Declarative run configuration: a key=value file plus CLI overrides.
struct RunConfig {
  std::string corpus_path;
  std::string corpus_format = "uci-bow";  // or "triplet-tsv"
  std::string vocab_path;
  std::string taxonomy_path;  // required in topicnet mode
  std::string tree_json_path; // prebuilt tree; alternative to taxonomy_path

  std::vector<int> layer_sizes;  // latent sizes K_1..K_T; empty = from tree
  int tree_depth = 3;            // taxonomy truncation depth when building from edges
  int embed_dim = 100;
  int hidden = 256;
  double lr = 0.01;
  int batch_size = 200;
  int epochs = 10;
  std::uint64_t seed = 1;
  double margin = 10.0;
  double beta = 1.0;
  double gamma_threshold = 2.0;
  double scale_c = 1.0;
  int s_train = 1;
  int s_eval = 8;
  double train_fraction = 0.8;
  bool heldout = false;  // train on the seeded token split instead of the full corpus
  std::string mode = "gauss-sawetm";  // or "topicnet"
  bool literal_hinge = false;
  int checkpoint_every = 500;
  std::string out_dir = ".";

  ModelMode model_mode() const;
  void validate() const;  // throws std::runtime_error on invalid combinations

  // Deterministic key=value form, sorted keys; basis of the config hash.
  std::string canonical() const;
  std::string hash() const;  // 16 hex chars (FNV-1a of canonical form)

  static RunConfig load(const std::string& path);
  void apply(const std::string& key, const std::string& value);
};

}  // namespace topicnet
