#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "topicnet/corpus.hpp"

namespace topicnet {

// Raw hypernym edge list. Edges are (child, parent); insertion order of the
// edge list is preserved for deterministic tie-breaking.
struct HypernymGraph {
  std::vector<std::string> nodes;                           // insertion order
  std::vector<std::pair<std::string, std::string>> edges;   // (child, parent)

  // "child<TAB>parent" per line, UTF-8.
  static HypernymGraph load(const std::string& path);
  static HypernymGraph from_edges(std::vector<std::pair<std::string, std::string>> edges);
};

// Layer-aligned rooted taxonomy. Layer 0 is the word layer, layer depth() is
// the root layer. Within a layer, node order is deterministic and defines the
// topic index.
struct TopicTree {
  // layers[t] holds the node names of layer t, t = 0..depth
  std::vector<std::vector<std::string>> layers;
  // parent[t][i] = index within layers[t+1] of the parent of layers[t][i]
  std::vector<std::vector<int>> parent;
  // vocabulary id of each word-layer node; filled by down_top_restrict,
  // empty before restriction (word index = layer position then)
  std::vector<int> word_ids;
  std::vector<std::string> warnings;

  int depth() const { return static_cast<int>(layers.size()) - 1; }
  std::vector<int> layer_sizes() const;  // [K_0 .. K_T]
  // children()[t][j] = indices in layer t of children of node j at layer t+1
  std::vector<std::vector<std::vector<int>>> children() const;

  void validate() const;
  std::string to_json() const;
  static TopicTree from_json(const std::string& json_text);
};

// Keeps the top `depth` graph layers as topic layers; every deeper node is
// reattached under its nearest kept ancestor and becomes a word-layer node.
// Multi-parent nodes keep their first parent in edge-list order (warning
// recorded). Throws on cycles or an empty graph.
TopicTree top_down_truncate(const HypernymGraph& graph, int depth);

// Intersects the word layer with the vocabulary, then drops internal nodes
// with no surviving descendants, bottom-up. Throws when the intersection is
// empty. Idempotent.
TopicTree down_top_restrict(const TopicTree& tree, const Vocabulary& vocab);

// D = child indices of topic j at layer `upper_layer` (indices into layer
// upper_layer-1) plus the complement of D in that layer.
std::pair<std::vector<int>, std::vector<int>> positive_negative_sets(const TopicTree& tree,
                                                                     int upper_layer, int topic);

}  // namespace topicnet
