#pragma once

#include <functional>
#include <optional>
#include <string>

#include "topicnet/config.hpp"
#include "topicnet/corpus.hpp"
#include "topicnet/model.hpp"
#include "topicnet/objective.hpp"
#include "topicnet/taxonomy.hpp"

namespace topicnet {

struct TrainResult {
  ModelParams params;
  long steps = 0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  std::string checkpoint_path;
};

struct TrainOptions {
  std::string log_path;         // JSONL, empty = no log
  std::string checkpoint_path;  // empty = no checkpoints
  int checkpoint_every = 500;
  long max_steps = -1;          // cap across epochs, -1 = epochs only
  std::optional<long> resume_step;  // continue step numbering from here
  std::function<void(long step, const LossBreakdown&)> on_step;
};

// Seeded, deterministic training loop: minibatch epochs, Adam updates,
// JSONL step log, periodic checkpoints. On a nonfinite loss the last good
// checkpoint is kept and the error rethrown.
TrainResult train(ModelParams params, const SparseCorpus& corpus, const TopicTree* tree,
                  const RunConfig& cfg, const TrainOptions& opts);

}  // namespace topicnet
