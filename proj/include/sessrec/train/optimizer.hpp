#pragma once

#include <span>
#include <vector>

#include "sessrec/ag/tape.hpp"
#include "sessrec/types.hpp"

namespace sessrec::train {

struct AdamConfig {
  scalar_t learning_rate = 1e-3;
  scalar_t beta1 = 0.9;
  scalar_t beta2 = 0.999;
  scalar_t epsilon = 1e-8;
  scalar_t weight_decay = 0;  // L2 penalty added to the gradient when > 0
};

/** First/second moments, ordered like the parameter list they serve. */
struct AdamState {
  long step = 0;
  std::vector<matrix_t> m;
  std::vector<matrix_t> v;
};

/**
 * One bias-corrected Adam update over `params` (their .grad fields hold
 * the current gradients). Non-finite gradients abort the step before any
 * parameter changes.
 */
void adam_step(std::span<ag::Parameter* const> params, AdamState& state, const AdamConfig& config);

/** initial * 0.5^floor(epoch / period); a non-positive period disables halving. */
scalar_t lr_schedule(int epoch, scalar_t initial, int halving_period);

}  // namespace sessrec::train
