#include <cmath>

#include "conic_ke/errors.hpp"
#include "conic_ke/geometry.hpp"

namespace conic_ke {

Grid::Grid(double half_width, int n_nodes) : half_width_(half_width), n_nodes_(n_nodes) {
  if (!(half_width > 0) || !std::isfinite(half_width))
    throw InvalidArgument("grid half-width must be positive");
  if (n_nodes < 9 || n_nodes % 2 == 0)
    throw InvalidArgument("grid node count must be odd and at least 9");
  h_ = 2.0 * half_width / (n_nodes - 1);
  nodes_.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) nodes_[i] = node(i);
  nodes_[n_nodes / 2] = 0.0;
  weights_ = numerics::simpson_weights(n_nodes, h_);
}

}  // namespace conic_ke
