#include "utep/pseudo.hpp"

#include <stdexcept>
#include <string>

namespace utep {

namespace {

void check_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in (0, 1), got " + std::to_string(v));
  }
}

}  // namespace

Array2 select_positive(const Array2& probs, double beta) {
  check_open_unit(beta, "beta");
  Array2 h(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.size(); ++i) h[i] = probs[i] >= beta ? 1.0 : 0.0;
  return h;
}

Array2 select_negative(const Array2& probs, double gamma, double beta) {
  check_open_unit(gamma, "gamma");
  check_open_unit(beta, "beta");
  if (gamma >= beta) {
    throw std::invalid_argument("gamma must be below beta (" + std::to_string(gamma) +
                                " >= " + std::to_string(beta) + ")");
  }
  Array2 l(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.size(); ++i) l[i] = probs[i] <= gamma ? 1.0 : 0.0;
  return l;
}

PseudoLabelSet select_pseudo_labels(const Array2& probs, double beta, double gamma) {
  return {probs, select_positive(probs, beta), select_negative(probs, gamma, beta), beta, gamma};
}

}  // namespace utep
