#include "topicnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace topicnet {

TrainResult train(ModelParams params, const SparseCorpus& corpus, const TopicTree* tree,
                  const RunConfig& cfg, const TrainOptions& opts) {
  ObjectiveConfig obj;
  obj.beta = cfg.model_mode() == ModelMode::TopicNet ? cfg.beta : 0.0;
  obj.margin = cfg.margin;
  obj.gamma_threshold = cfg.gamma_threshold;
  obj.theta_samples = cfg.s_train;
  obj.literal_hinge = cfg.literal_hinge;

  AdamConfig adam;
  adam.lr = cfg.lr;

  std::ofstream log;
  if (!opts.log_path.empty()) {
    log.open(opts.log_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot open training log: " + opts.log_path);
  }

  const TopicTree* active_tree = obj.beta != 0.0 ? tree : nullptr;
  const std::string config_hash = cfg.hash();

  TrainResult result;
  result.params = std::move(params);
  long step = opts.resume_step.value_or(0);
  const long start_step = step;

  // one RNG stream for batch order, one for theta noise; both advance with
  // the step counter so a resumed run replays the identical sequence
  std::mt19937_64 theta_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto t_start = std::chrono::steady_clock::now();

  // a resumed run fast-forwards to the epoch/batch position the checkpoint
  // recorded, so the remaining schedule is identical to an uninterrupted run
  const long steps_per_epoch =
      (corpus.num_docs() + cfg.batch_size - 1) / std::max(1, cfg.batch_size);
  const int first_epoch = static_cast<int>(step / std::max<long>(1, steps_per_epoch));
  long global_batch = static_cast<long>(first_epoch) * steps_per_epoch;

  for (int epoch = first_epoch; epoch < cfg.epochs; ++epoch) {
    auto batches = minibatches(corpus.num_docs(), cfg.batch_size,
                               cfg.seed + static_cast<std::uint64_t>(epoch), /*shuffle=*/true);
    for (const auto& batch : batches) {
      if (global_batch++ < step) continue;  // within-epoch fast-forward
      if (opts.max_steps >= 0 && step - start_step >= opts.max_steps) break;
      // replaying from the checkpointed step keeps resumed noise identical
      theta_rng.seed(cfg.seed ^ 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(step + 1));

      // a nonfinite loss throws here, leaving the last good checkpoint on disk
      auto [loss, grads] =
          total_loss_and_gradients(result.params, corpus, batch, active_tree, obj, theta_rng);
      adam_step(result.params, grads, adam, step + 1);
      ++step;
      if (step - start_step == 1) result.first_loss = loss.total;
      result.last_loss = loss.total;

      if (log.is_open()) {
        const double wallclock =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        nlohmann::ordered_json j;
        j["step"] = step;
        j["nll"] = loss.neg_log_likelihood;
        j["kl"] = std::vector<double>(loss.kl_per_layer.begin() + 1, loss.kl_per_layer.end());
        j["prior"] = loss.prior_loss;
        j["total"] = loss.total;
        j["wallclock"] = wallclock;
        log << j.dump() << "\n";
      }
      if (opts.on_step) opts.on_step(step, loss);

      if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
          step % opts.checkpoint_every == 0) {
        save_checkpoint(result.params, opts.checkpoint_path, config_hash, cfg.seed, step);
        result.checkpoint_path = opts.checkpoint_path;
      }
    }
    if (opts.max_steps >= 0 && step - start_step >= opts.max_steps) break;
  }

  if (!opts.checkpoint_path.empty()) {
    save_checkpoint(result.params, opts.checkpoint_path, config_hash, cfg.seed, step);
    result.checkpoint_path = opts.checkpoint_path;
  }
  result.steps = step;
  return result;
}

}  // namespace topicnet
