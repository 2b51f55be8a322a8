#include "sessrec/train/fit.hpp"

namespace sessrec::train {

void TrainConfig::validate() const {
  if (model != "repeatnet" && model != "srgnn")
    throw ConfigError("unknown model '" + model + "' (expected repeatnet|srgnn)");
  if (embedding_dim < 1 || hidden_dim < 1) throw ConfigError("dimensions must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw ConfigError("beta1/beta2 must lie in [0, 1)");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (attention_loss_weight < 0) throw ConfigError("attention_loss_weight must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
  if (propagation_steps < 1) throw ConfigError("propagation_steps must be >= 1");
  if (eval_ks.empty()) throw ConfigError("eval_ks must name at least one cutoff");
  for (int k : eval_ks)
    if (k < 1) throw ConfigError("evaluation cutoffs must be >= 1");
  if (!(validation_fraction > 0 && validation_fraction < 1))
    throw ConfigError("validation_fraction must lie strictly between 0 and 1");
}

int TrainConfig::primary_k() const {
  for (int k : eval_ks)
    if (k == 20) return 20;
  return eval_ks.back();
}

TrainConfig default_train_config(const std::string& model) {
  TrainConfig cfg;
  cfg.model = model;
  if (model == "repeatnet") {
    cfg.batch_size = 128;
    cfg.lr_halving_period = 5;
    cfg.weight_decay = 0;
    cfg.early_stop_patience = 0;
  } else if (model == "srgnn") {
    cfg.batch_size = 100;
    cfg.lr_halving_period = 3;
    cfg.weight_decay = 1e-5;
    cfg.early_stop_patience = 3;
  } else {
    throw ConfigError("unknown model '" + model + "' (expected repeatnet|srgnn)");
  }
  return cfg;
}

}  // namespace sessrec::train
