#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "sessrec/ag/tape.hpp"
#include "sessrec/types.hpp"

namespace sessrec::nn {

/**
 * Gated recurrent cell without biases. Each weight maps the concatenation
 * [input; previous hidden] to the hidden dimension; the initial hidden
 * state is zero.
 */
struct GruParams {
  ag::Parameter update;     // z gate
  ag::Parameter reset;      // r gate
  ag::Parameter candidate;  // h~

  index_t hidden_dim() const { return update.value.rows(); }
  index_t input_dim() const { return update.value.cols() - update.value.rows(); }
};

GruParams make_gru(const std::string& name_prefix, index_t input_dim, index_t hidden_dim,
                   std::mt19937_64& rng);

/** Per-tape handles to the three weight leaves. */
struct GruVars {
  ag::Var update, reset, candidate;
};

GruVars bind(ag::Tape& tape, GruParams& params);

/**
 * Runs the recurrence over a sequence of input vectors. Masked steps carry
 * the previous hidden state forward and emit an exact zero vector.
 */
std::vector<ag::Var> gru_encode(ag::Tape& tape, std::span<const ag::Var> inputs, const mask_t& mask,
                                const GruVars& w);

/** Forward-only convenience over plain vectors. */
std::vector<vector_t> gru_encode(std::span<const vector_t> inputs, const mask_t& mask,
                                 const GruParams& params);

}  // namespace sessrec::nn
