#pragma once

#include "sessrec/types.hpp"

namespace sessrec {

/**
 * Per-term view of a batch loss. `attention` is the unweighted
 * regularization term; `total` already includes its configured weight.
 */
struct LossBreakdown {
  scalar_t total = 0;
  scalar_t prediction = 0;  // negative log-likelihood / cross-entropy part
  scalar_t mode = 0;        // repeat-or-explore term (zero for models without one)
  scalar_t attention = 0;
};

}  // namespace sessrec
