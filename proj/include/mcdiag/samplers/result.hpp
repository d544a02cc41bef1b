#pragma once

#include "mcdiag/chain.hpp"

namespace mcdiag {

struct SamplerResult {
  Chain chain;
  double acceptance_rate = 0.0;
};

}  // namespace mcdiag
