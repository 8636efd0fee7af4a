#include "topicnet/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace topicnet {

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

std::string join_int_list(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

ModelMode RunConfig::model_mode() const {
  if (mode == "gauss-sawetm") return ModelMode::GaussSawEtm;
  if (mode == "topicnet") return ModelMode::TopicNet;
  throw std::runtime_error("unknown mode: " + mode);
}

void RunConfig::validate() const {
  model_mode();
  if (corpus_path.empty()) throw std::runtime_error("config: corpus path required");
  if (vocab_path.empty()) throw std::runtime_error("config: vocab path required");
  if (corpus_format != "uci-bow" && corpus_format != "triplet-tsv")
    throw std::runtime_error("config: unknown corpus format " + corpus_format);
  if (model_mode() == ModelMode::TopicNet && taxonomy_path.empty() && tree_json_path.empty())
    throw std::runtime_error("config: mode=topicnet requires a taxonomy path");
  if (layer_sizes.empty() && taxonomy_path.empty() && tree_json_path.empty())
    throw std::runtime_error("config: layer_sizes required without a taxonomy");
  for (int k : layer_sizes)
    if (k < 1) throw std::runtime_error("config: layer sizes must be positive");
  if (embed_dim < 1 || hidden < 1 || batch_size < 1 || epochs < 0 || s_train < 1 || s_eval < 1)
    throw std::runtime_error("config: sizes and sample counts must be positive");
  if (lr <= 0.0) throw std::runtime_error("config: lr must be positive");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::runtime_error("config: train_fraction must be in (0,1)");
  if (gamma_threshold < 0.0) throw std::runtime_error("config: gamma_threshold must be >= 0");
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["corpus_path"] = corpus_path;
  kv["corpus_format"] = corpus_format;
  kv["vocab_path"] = vocab_path;
  kv["taxonomy_path"] = taxonomy_path;
  kv["tree_json_path"] = tree_json_path;
  kv["layer_sizes"] = join_int_list(layer_sizes);
  kv["tree_depth"] = std::to_string(tree_depth);
  kv["embed_dim"] = std::to_string(embed_dim);
  kv["hidden"] = std::to_string(hidden);
  kv["lr"] = std::to_string(lr);
  kv["batch_size"] = std::to_string(batch_size);
  kv["epochs"] = std::to_string(epochs);
  kv["seed"] = std::to_string(seed);
  kv["margin"] = std::to_string(margin);
  kv["beta"] = std::to_string(beta);
  kv["gamma_threshold"] = std::to_string(gamma_threshold);
  kv["scale_c"] = std::to_string(scale_c);
  kv["s_train"] = std::to_string(s_train);
  kv["s_eval"] = std::to_string(s_eval);
  kv["train_fraction"] = std::to_string(train_fraction);
  kv["heldout"] = heldout ? "true" : "false";
  kv["mode"] = mode;
  kv["literal_hinge"] = literal_hinge ? "true" : "false";
  std::string out;
  for (const auto& [key, value] : kv) out += key + "=" + value + "\n";
  return out;
}

std::string RunConfig::hash() const {
  // FNV-1a 64-bit
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "corpus_path") corpus_path = value;
  else if (key == "corpus_format") corpus_format = value;
  else if (key == "vocab_path") vocab_path = value;
  else if (key == "taxonomy_path") taxonomy_path = value;
  else if (key == "tree_json_path") tree_json_path = value;
  else if (key == "layer_sizes") layer_sizes = parse_int_list(value);
  else if (key == "tree_depth") tree_depth = std::stoi(value);
  else if (key == "embed_dim") embed_dim = std::stoi(value);
  else if (key == "hidden") hidden = std::stoi(value);
  else if (key == "lr") lr = std::stod(value);
  else if (key == "batch_size") batch_size = std::stoi(value);
  else if (key == "epochs") epochs = std::stoi(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "margin") margin = std::stod(value);
  else if (key == "beta") beta = std::stod(value);
  else if (key == "gamma_threshold") gamma_threshold = std::stod(value);
  else if (key == "scale_c") scale_c = std::stod(value);
  else if (key == "s_train") s_train = std::stoi(value);
  else if (key == "s_eval") s_eval = std::stoi(value);
  else if (key == "train_fraction") train_fraction = std::stod(value);
  else if (key == "heldout") heldout = (value == "true" || value == "1");
  else if (key == "mode") mode = value;
  else if (key == "literal_hinge") literal_hinge = (value == "true" || value == "1");
  else if (key == "checkpoint_every") checkpoint_every = std::stoi(value);
  else if (key == "out_dir") out_dir = value;
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    try {
      cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace topicnet
