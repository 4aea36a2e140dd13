#pragma once

#include <cstddef>
#include <vector>

#include "ttn/feature_map.hpp"

namespace ttn {

// A vectorized image set with class labels; the in-memory training/test
// carrier shared by the trainer, the ensemble, and the CLI.
struct Dataset {
  std::size_t side = 0;
  std::size_t d = 0;
  std::vector<VectorizedImage> samples;
  std::vector<int> labels;  // class ids, parallel to samples

  std::size_t size() const { return samples.size(); }
};

}  // namespace ttn
