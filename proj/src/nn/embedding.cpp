#include "sessrec/nn/embedding.hpp"

#include "sessrec/errors.hpp"
#include "sessrec/nn/init.hpp"

namespace sessrec::nn {

EmbeddingTable make_embedding(std::string name, index_t vocab_size, index_t dim,
                              std::mt19937_64& rng) {
  EmbeddingTable t;
  t.table = ag::Parameter(std::move(name), uniform_init(rng, vocab_size, dim));
  t.table.value.row(0).setZero();
  return t;
}

vector_t embed(const EmbeddingTable& table, vocab_id id) {
  if (id < 0 || id >= table.vocab_size()) throw std::out_of_range("embedding id out of range");
  return table.table.value.row(id).transpose();
}

vector_t embed(const EmbeddingTable& table, const SideValue& ids) {
  if (ids.empty()) throw std::invalid_argument("embedding of an empty ID set");
  vector_t out = vector_t::Zero(table.dim());
  for (vocab_id id : ids) {
    if (id < 0 || id >= table.vocab_size()) throw std::out_of_range("embedding id out of range");
    out += table.table.value.row(id).transpose();
  }
  return out / static_cast<scalar_t>(ids.size());
}

}  // namespace sessrec::nn
