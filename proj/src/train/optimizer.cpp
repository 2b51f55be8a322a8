#include "sessrec/train/optimizer.hpp"

#include <cmath>

#include "sessrec/errors.hpp"

namespace sessrec::train {

void adam_step(std::span<ag::Parameter* const> params, AdamState& state, const AdamConfig& config) {
  if (state.m.empty()) {
    for (const ag::Parameter* p : params) {
      state.m.push_back(matrix_t::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(matrix_t::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size())
    throw ShapeError("adam_step: optimizer state does not match the parameter list");
  for (const ag::Parameter* p : params)
    if (!p->grad.allFinite())
      throw NumericError("adam_step: non-finite gradient in '" + p->name + "', step aborted");

  state.step += 1;
  const scalar_t bc1 = 1.0 - std::pow(config.beta1, static_cast<scalar_t>(state.step));
  const scalar_t bc2 = 1.0 - std::pow(config.beta2, static_cast<scalar_t>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ag::Parameter& p = *params[i];
    matrix_t g = p.grad;
    if (config.weight_decay > 0) g += config.weight_decay * p.value;
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g.cwiseProduct(g);
    const matrix_t m_hat = state.m[i] / bc1;
    const matrix_t v_hat = state.v[i] / bc2;
    const matrix_t denom =
        v_hat.cwiseSqrt() + matrix_t::Constant(p.value.rows(), p.value.cols(), config.epsilon);
    p.value -= config.learning_rate * m_hat.cwiseQuotient(denom);
  }
}

scalar_t lr_schedule(int epoch, scalar_t initial, int halving_period) {
  if (epoch < 0) throw ConfigError("lr_schedule: epoch must be >= 0");
  if (halving_period <= 0) return initial;
  return initial * std::pow(0.5, static_cast<scalar_t>(epoch / halving_period));
}

}  // namespace sessrec::train
