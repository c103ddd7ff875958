#pragma once

#include <stdexcept>
#include <vector>

#include "ser/tensor.hpp"

namespace ser {

// Model-ready examples: one feature matrix per clip plus its class code.
struct FeatureDataset {
  std::vector<Tensor> x;
  std::vector<int> y;
  std::size_t n_classes = 8;

  std::size_t size() const { return x.size(); }

  void validate() const {
    if (x.size() != y.size())
      throw std::invalid_argument("feature dataset: " + std::to_string(x.size()) +
                                  " tensors vs " + std::to_string(y.size()) + " labels");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= n_classes)
        throw std::invalid_argument("feature dataset: label " + std::to_string(y[i]) +
                                    " outside [0, " + std::to_string(n_classes) + ")");
      if (!x[i].same_shape(x[0]))
        throw std::invalid_argument("feature dataset: example " + std::to_string(i) +
                                    " shape " + x[i].shape_str() + " != " +
                                    x[0].shape_str());
    }
  }
};

}  // namespace ser
