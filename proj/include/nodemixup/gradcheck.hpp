#pragma once

#include <cstdint>

#include "nodemixup/graphio.hpp"
#include "nodemixup/nn.hpp"

namespace nodemixup {

struct TinyProblem {
  std::size_t nodes = 8;
  std::size_t features = 5;
  std::size_t hidden = 4;
  std::size_t classes = 3;
  std::uint64_t seed = 0;
};

/// Random connected graph with Gaussian features and a labeled half.
Dataset tiny_dataset(const TinyProblem& p);

/// Finite-difference check of the eval-mode objective on a tiny random
/// problem. With `mixup` the full regularized loss is checked, with every
/// unlabeled node pseudo-labeled and both mixup branches active.
GradCheckResult gradcheck_tiny(const TinyProblem& p, double eps, bool mixup);

}  // namespace nodemixup
