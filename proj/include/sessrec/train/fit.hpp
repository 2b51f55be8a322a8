#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sessrec/data/sessions.hpp"
#include "sessrec/errors.hpp"
#include "sessrec/loss.hpp"
#include "sessrec/train/metrics.hpp"
#include "sessrec/train/optimizer.hpp"
#include "sessrec/types.hpp"

namespace sessrec::train {

struct TrainConfig {
  std::string model = "repeatnet";  // repeatnet | srgnn
  bool use_side = false;
  index_t embedding_dim = 100;
  index_t side_dim = 100;
  index_t hidden_dim = 100;
  int batch_size = 128;
  scalar_t learning_rate = 1e-3;
  scalar_t beta1 = 0.9;
  scalar_t beta2 = 0.999;
  scalar_t weight_decay = 0;
  int lr_halving_period = 5;
  int early_stop_patience = 0;  // 0 disables early stopping
  scalar_t attention_loss_weight = 0;
  int epochs = 30;
  int propagation_steps = 1;
  std::uint64_t seed = 42;
  std::vector<int> eval_ks{10, 20};
  double validation_fraction = 0.1;

  void validate() const;
  int primary_k() const;  // the K tracked for early stopping (20 when configured)
};

/** Per-model training recipes (batch size, halving period, decay, patience). */
TrainConfig default_train_config(const std::string& model);

struct EpochRecord {
  int epoch = 0;
  scalar_t train_loss = 0;
  std::vector<scalar_t> recall;  // parallel to TrainConfig::eval_ks
  std::vector<scalar_t> mrr;
  double wall_seconds = 0;
};

struct FitResult {
  std::vector<EpochRecord> records;
  int best_epoch = -1;
  scalar_t best_metric = 0;  // validation recall at primary_k
};

/** Deterministic stream of per-epoch shuffle seeds. */
inline std::uint64_t epoch_seed(std::uint64_t base, int epoch) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/** Ranks of every (prefix -> target) pair in `sessions` under the model. */
template <class Model>
std::vector<int> target_ranks(const Model& model, std::span<const data::Session> sessions) {
  std::vector<int> ranks;
  for (const data::Session& s : sessions) {
    const std::vector<vector_t> scores = model.score_prefixes(s);
    for (std::size_t r = 1; r < s.items.size(); ++r)
      ranks.push_back(rank_of_target(scores[r - 1], s.items[r]));
  }
  return ranks;
}

template <class Model>
std::vector<matrix_t> snapshot_params(Model& model) {
  std::vector<matrix_t> snap;
  model.visit_params([&](ag::Parameter& p) { snap.push_back(p.value); });
  return snap;
}

template <class Model>
void restore_params(Model& model, const std::vector<matrix_t>& snap) {
  std::size_t i = 0;
  model.visit_params([&](ag::Parameter& p) { p.value = snap[i++]; });
}

/**
 * Seeded mini-batch training with the halving schedule, per-epoch
 * validation metrics, and optional early stopping that restores the
 * best-epoch parameters. Batches are whole sessions.
 */
template <class Model>
FitResult fit(Model& model, std::vector<data::Session> train,
              const std::vector<data::Session>& validation, const TrainConfig& cfg,
              int resume_epoch = 0, AdamState* opt_state = nullptr) {
  cfg.validate();
  if (train.empty() || validation.empty())
    throw std::invalid_argument("fit: train and validation sets must be non-empty");

  std::vector<ag::Parameter*> params;
  model.visit_params([&](ag::Parameter& p) { params.push_back(&p); });

  AdamState local_state;
  AdamState& state = opt_state ? *opt_state : local_state;

  FitResult result;
  std::vector<matrix_t> best_snapshot;
  const std::size_t k_index = [&] {
    const auto it = std::find(cfg.eval_ks.begin(), cfg.eval_ks.end(), cfg.primary_k());
    return static_cast<std::size_t>(it - cfg.eval_ks.begin());
  }();

  // Epoch order must depend only on (seed, epoch) so that resuming from a
  // checkpoint replays exactly the schedule of an uninterrupted run.
  std::vector<std::size_t> order(train.size());
  std::vector<data::Session> epoch_train(train.size());

  for (int epoch = resume_epoch; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const scalar_t lr = lr_schedule(epoch, cfg.learning_rate, cfg.lr_halving_period);
    std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < train.size(); ++i) epoch_train[i] = train[order[i]];

    scalar_t loss_sum = 0;
    std::size_t loss_sessions = 0;
    for (std::size_t at = 0; at < epoch_train.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n =
          std::min(static_cast<std::size_t>(cfg.batch_size), epoch_train.size() - at);
      const std::span<const data::Session> batch(epoch_train.data() + at, n);
      model.zero_grads();
      const sessrec::LossBreakdown breakdown =
          model.batch_loss_grad(batch, cfg.attention_loss_weight);
      if (!std::isfinite(breakdown.total))
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch offset " + std::to_string(at));
      AdamConfig step_cfg;
      step_cfg.learning_rate = lr;
      step_cfg.beta1 = cfg.beta1;
      step_cfg.beta2 = cfg.beta2;
      step_cfg.weight_decay = cfg.weight_decay;
      adam_step(params, state, step_cfg);
      loss_sum += breakdown.total * static_cast<scalar_t>(n);
      loss_sessions += n;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<scalar_t>(loss_sessions);
    const std::vector<int> ranks = target_ranks(model, validation);
    for (int k : cfg.eval_ks) {
      rec.recall.push_back(recall_from_ranks(ranks, k));
      rec.mrr.push_back(mrr_from_ranks(ranks, k));
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.records.push_back(rec);

    const scalar_t metric = rec.recall[k_index];
    if (result.best_epoch < 0 || metric > result.best_metric) {
      result.best_metric = metric;
      result.best_epoch = epoch;
      if (cfg.early_stop_patience > 0) best_snapshot = snapshot_params(model);
    } else if (cfg.early_stop_patience > 0 &&
               epoch - result.best_epoch >= cfg.early_stop_patience) {
      break;
    }
  }

  if (cfg.early_stop_patience > 0 && !best_snapshot.empty()) restore_params(model, best_snapshot);
  return result;
}

}  // namespace sessrec::train
