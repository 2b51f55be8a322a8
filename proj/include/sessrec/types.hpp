#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sessrec {

/** Scalar type used throughout the library. */
using scalar_t = double;

/** Dense column vector. */
using vector_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>;

/** Dense matrix, column-major. */
using matrix_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, Eigen::Dynamic>;

using index_t = Eigen::Index;

/** Item / side-value identifier. 0 is reserved for padding. */
using vocab_id = std::int32_t;

/**
 * Side-information attached to one event or one session step.
 * Empty = no side value (padding or a dataset without side information);
 * one element = a single categorical value; several = a value set
 * (e.g. the genres of a movie). Members are kept sorted ascending.
 */
using SideValue = std::vector<vocab_id>;

/** Per-timestep validity flags; 0 marks a padded position. */
using mask_t = std::vector<char>;

}  // namespace sessrec
