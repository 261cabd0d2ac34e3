#pragma once

#include <span>
#include <string>
#include <vector>

namespace cgmcr {

/// Mutable view of one trainable tensor.
struct ParamView {
  std::string name;
  std::span<double> values;
};

/// One gradient buffer per ParamView, in the same order.
using ParamGrads = std::vector<std::vector<double>>;

}  // namespace cgmcr
