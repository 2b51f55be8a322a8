#include "sessrec/nn/gru.hpp"

#include "sessrec/nn/init.hpp"

namespace sessrec::nn {

GruParams make_gru(const std::string& name_prefix, index_t input_dim, index_t hidden_dim,
                   std::mt19937_64& rng) {
  GruParams p;
  p.update = make_param(name_prefix + ".update", rng, hidden_dim, input_dim + hidden_dim);
  p.reset = make_param(name_prefix + ".reset", rng, hidden_dim, input_dim + hidden_dim);
  p.candidate = make_param(name_prefix + ".candidate", rng, hidden_dim, input_dim + hidden_dim);
  return p;
}

GruVars bind(ag::Tape& tape, GruParams& params) {
  return GruVars{tape.param(params.update), tape.param(params.reset), tape.param(params.candidate)};
}

std::vector<ag::Var> gru_encode(ag::Tape& tape, std::span<const ag::Var> inputs, const mask_t& mask,
                                const GruVars& w) {
  if (inputs.size() != mask.size()) throw ShapeError("gru_encode: mask length mismatch");
  const index_t hidden = w.update.rows();
  std::vector<ag::Var> outputs;
  outputs.reserve(inputs.size());
  ag::Var h = tape.constant(matrix_t::Zero(hidden, 1));
  ag::Var zero_out = h;
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    if (!mask[r]) {
      outputs.push_back(zero_out);
      continue;
    }
    if (!inputs[r].value().allFinite()) throw NumericError("gru_encode: non-finite input");
    ag::Var joint = ag::vcat(inputs[r], h);
    ag::Var z = ag::sigmoid(ag::matmul(w.update, joint));
    ag::Var reset = ag::sigmoid(ag::matmul(w.reset, joint));
    ag::Var gated = ag::vcat(inputs[r], ag::cmul(reset, h));
    ag::Var cand = ag::tanh_(ag::matmul(w.candidate, gated));
    h = ag::add(ag::cmul(ag::one_minus(z), h), ag::cmul(z, cand));
    outputs.push_back(h);
  }
  return outputs;
}

std::vector<vector_t> gru_encode(std::span<const vector_t> inputs, const mask_t& mask,
                                 const GruParams& params) {
  ag::Tape tape;
  GruVars w{tape.constant(params.update.value), tape.constant(params.reset.value),
            tape.constant(params.candidate.value)};
  std::vector<ag::Var> in_vars;
  in_vars.reserve(inputs.size());
  for (const vector_t& v : inputs) in_vars.push_back(tape.constant(matrix_t(v)));
  std::vector<ag::Var> hs = gru_encode(tape, in_vars, mask, w);
  std::vector<vector_t> out;
  out.reserve(hs.size());
  for (const ag::Var& h : hs) out.push_back(h.value().col(0));
  return out;
}

}  // namespace sessrec::nn
