#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "utep/ndgrad/gradcheck.hpp"

namespace utep::cli {

struct OpCheck {
  std::string name;
  ndgrad::GradcheckResult result;
};

/// Finite-difference checks for every tape op, each loss, and the assembled
/// total objective on a small network with frozen dropout masks.
std::vector<OpCheck> run_gradient_suite(std::uint64_t seed);

}  // namespace utep::cli
