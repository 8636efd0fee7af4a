#include "topicnet/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace topicnet {

HypernymGraph HypernymGraph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open taxonomy file: " + path);
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected child<TAB>parent");
    std::string child = line.substr(0, tab);
    std::string parent = line.substr(tab + 1);
    if (child.empty() || parent.empty() || child == parent)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid edge");
    edges.emplace_back(std::move(child), std::move(parent));
  }
  return from_edges(std::move(edges));
}

HypernymGraph HypernymGraph::from_edges(std::vector<std::pair<std::string, std::string>> edges) {
  HypernymGraph g;
  std::unordered_set<std::string> seen;
  auto note = [&](const std::string& name) {
    if (seen.insert(name).second) g.nodes.push_back(name);
  };
  for (const auto& [child, parent] : edges) {
    note(parent);
    note(child);
  }
  g.edges = std::move(edges);
  return g;
}

std::vector<int> TopicTree::layer_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(layers.size());
  for (const auto& layer : layers) sizes.push_back(static_cast<int>(layer.size()));
  return sizes;
}

std::vector<std::vector<std::vector<int>>> TopicTree::children() const {
  std::vector<std::vector<std::vector<int>>> out(depth());
  for (int t = 0; t < depth(); ++t) {
    out[t].resize(layers[t + 1].size());
    for (int i = 0; i < static_cast<int>(layers[t].size()); ++i)
      out[t][parent[t][i]].push_back(i);
  }
  return out;
}

void TopicTree::validate() const {
  if (layers.size() < 2) throw std::runtime_error("TopicTree: need at least word and root layers");
  if (parent.size() != layers.size() - 1)
    throw std::runtime_error("TopicTree: parent table size mismatch");
  for (int t = 0; t < depth(); ++t) {
    if (parent[t].size() != layers[t].size())
      throw std::runtime_error("TopicTree: parent row size mismatch at layer " + std::to_string(t));
    for (int p : parent[t])
      if (p < 0 || p >= static_cast<int>(layers[t + 1].size()))
        throw std::runtime_error("TopicTree: dangling parent at layer " + std::to_string(t));
  }
}

std::string TopicTree::to_json() const {
  nlohmann::ordered_json j;
  j["depth"] = depth();
  j["layers"] = layers;
  j["parent_index"] = parent;
  nlohmann::ordered_json parent_names = nlohmann::ordered_json::object();
  for (int t = 0; t < depth(); ++t)
    for (int i = 0; i < static_cast<int>(layers[t].size()); ++i)
      parent_names[layers[t][i]] = layers[t + 1][parent[t][i]];
  j["parent"] = parent_names;
  j["layer_sizes"] = layer_sizes();
  j["word_ids"] = word_ids;
  j["warnings"] = warnings;
  return j.dump(2);
}

TopicTree TopicTree::from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  TopicTree tree;
  tree.layers = j.at("layers").get<std::vector<std::vector<std::string>>>();
  tree.parent = j.at("parent_index").get<std::vector<std::vector<int>>>();
  if (j.contains("word_ids")) tree.word_ids = j.at("word_ids").get<std::vector<int>>();
  if (j.contains("warnings")) tree.warnings = j.at("warnings").get<std::vector<std::string>>();
  tree.validate();
  return tree;
}

TopicTree top_down_truncate(const HypernymGraph& graph, int depth) {
  if (depth < 1) throw std::runtime_error("top_down_truncate: depth must be >= 1");
  if (graph.nodes.empty()) throw std::runtime_error("top_down_truncate: empty graph");

  TopicTree tree;

  // first parent in edge-list order wins; extra parents are dropped with a warning
  std::unordered_map<std::string, std::string> first_parent;
  for (const auto& [child, parent] : graph.edges) {
    auto [it, inserted] = first_parent.emplace(child, parent);
    if (!inserted && it->second != parent)
      tree.warnings.push_back("multi-parent node '" + child + "': kept parent '" + it->second +
                              "', dropped '" + parent + "'");
  }

  // depth of each node from its root, following the single-parent chain
  std::unordered_map<std::string, int> node_depth;
  for (const auto& name : graph.nodes) {
    std::vector<std::string> chain;
    std::unordered_set<std::string> on_chain;
    std::string cur = name;
    while (node_depth.find(cur) == node_depth.end()) {
      if (!on_chain.insert(cur).second)
        throw std::runtime_error("top_down_truncate: cycle through node '" + cur + "'");
      chain.push_back(cur);
      auto it = first_parent.find(cur);
      if (it == first_parent.end()) {
        node_depth[cur] = 0;  // root
        chain.pop_back();
        break;
      }
      cur = it->second;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      node_depth[*it] = node_depth[first_parent[*it]] + 1;
  }

  // graph depth d in [0, depth-1] -> tree layer depth - d; deeper nodes go to
  // the word layer under their nearest ancestor at graph depth depth-1
  tree.layers.assign(depth + 1, {});
  std::unordered_map<std::string, std::pair<int, int>> position;  // name -> (layer, index)
  for (const auto& name : graph.nodes) {
    const int d = node_depth[name];
    if (d >= depth) continue;
    const int layer = depth - d;
    position[name] = {layer, static_cast<int>(tree.layers[layer].size())};
    tree.layers[layer].push_back(name);
  }
  for (const auto& name : graph.nodes) {
    if (node_depth[name] < depth) continue;
    position[name] = {0, static_cast<int>(tree.layers[0].size())};
    tree.layers[0].push_back(name);
  }

  tree.parent.assign(depth, {});
  for (int t = 0; t < depth; ++t) tree.parent[t].resize(tree.layers[t].size(), -1);
  for (const auto& name : graph.nodes) {
    const auto [layer, idx] = position[name];
    if (layer == depth) continue;  // roots
    std::string parent_name;
    if (node_depth[name] >= depth) {
      std::string anc = first_parent[name];
      while (node_depth[anc] != depth - 1) anc = first_parent[anc];
      parent_name = anc;
    } else {
      auto it = first_parent.find(name);
      if (it == first_parent.end())
        throw std::runtime_error("top_down_truncate: non-root node '" + name + "' has no parent");
      parent_name = it->second;
    }
    tree.parent[layer][idx] = position[parent_name].second;
  }
  tree.validate();
  return tree;
}

TopicTree down_top_restrict(const TopicTree& tree, const Vocabulary& vocab) {
  tree.validate();
  const int T = tree.depth();

  TopicTree out;
  out.warnings = tree.warnings;
  out.layers.assign(T + 1, {});
  out.parent.assign(T, {});

  // kept[t] = indices of surviving nodes of tree.layers[t], in layer order
  std::vector<std::vector<int>> kept(T + 1);
  for (int i = 0; i < static_cast<int>(tree.layers[0].size()); ++i)
    if (vocab.contains(tree.layers[0][i])) kept[0].push_back(i);
  if (kept[0].empty())
    throw std::runtime_error("no overlap between taxonomy and vocabulary");

  for (int t = 1; t <= T; ++t) {
    std::unordered_set<int> has_child;
    for (int i : kept[t - 1]) has_child.insert(tree.parent[t - 1][i]);
    for (int j = 0; j < static_cast<int>(tree.layers[t].size()); ++j)
      if (has_child.count(j)) kept[t].push_back(j);
  }

  std::vector<std::unordered_map<int, int>> new_index(T + 1);
  for (int t = 0; t <= T; ++t) {
    for (int i : kept[t]) {
      new_index[t][i] = static_cast<int>(out.layers[t].size());
      out.layers[t].push_back(tree.layers[t][i]);
    }
  }
  for (int t = 0; t < T; ++t) {
    out.parent[t].resize(out.layers[t].size());
    for (int i : kept[t])
      out.parent[t][new_index[t][i]] = new_index[t + 1][tree.parent[t][i]];
  }
  out.word_ids.reserve(out.layers[0].size());
  for (const auto& term : out.layers[0]) out.word_ids.push_back(vocab.index.at(term));
  out.validate();
  return out;
}

std::pair<std::vector<int>, std::vector<int>> positive_negative_sets(const TopicTree& tree,
                                                                     int upper_layer, int topic) {
  if (upper_layer < 1 || upper_layer > tree.depth())
    throw std::runtime_error("positive_negative_sets: layer out of range");
  const int t = upper_layer - 1;
  std::vector<int> pos, neg;
  for (int i = 0; i < static_cast<int>(tree.layers[t].size()); ++i) {
    if (tree.parent[t][i] == topic)
      pos.push_back(i);
    else
      neg.push_back(i);
  }
  return {pos, neg};
}

}  // namespace topicnet
