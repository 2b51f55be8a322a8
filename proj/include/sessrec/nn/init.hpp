#pragma once

#include <random>
#include <string>

#include "sessrec/ag/tape.hpp"
#include "sessrec/types.hpp"

namespace sessrec::nn {

/**
 * Uniform(-1/sqrt(fan), 1/sqrt(fan)) initialization, fan being the input
 * width (rows for column vectors).
 */
inline matrix_t uniform_init(std::mt19937_64& rng, index_t rows, index_t cols) {
  const index_t fan = cols > 1 ? cols : rows;
  const scalar_t bound = scalar_t(1) / std::sqrt(static_cast<scalar_t>(fan));
  std::uniform_real_distribution<scalar_t> dist(-bound, bound);
  matrix_t m(rows, cols);
  for (index_t j = 0; j < cols; ++j)
    for (index_t i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

inline ag::Parameter make_param(std::string name, std::mt19937_64& rng, index_t rows, index_t cols) {
  return ag::Parameter(std::move(name), uniform_init(rng, rows, cols));
}

}  // namespace sessrec::nn
