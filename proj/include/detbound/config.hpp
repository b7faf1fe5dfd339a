#pragma once

#include <stdexcept>

namespace detbound {

// Discretization parameters shared by every module.
struct GridConfig {
  double T = 40.0;         // t-window is [-T, T], t = 2 log r
  int t_nodes = 512;       // uniform, symmetric
  int theta_nodes = 128;   // trapezoid nodes in the angle
  int stencil_pairs = 4;   // energy/derivative stencil order is 2 * stencil_pairs
  int circle_nodes = 256;  // samples of a circle metric, power of two

  void validate() const {
    if (!(T >= 20.0)) throw std::invalid_argument("grid: T must be >= 20");
    if (t_nodes < 16) throw std::invalid_argument("grid: need at least 16 t-nodes");
    if (theta_nodes < 4 || theta_nodes % 2 != 0)
      throw std::invalid_argument("grid: theta_nodes must be even and >= 4");
    if (stencil_pairs < 1 || stencil_pairs > 8)
      throw std::invalid_argument("grid: stencil_pairs must be in [1, 8]");
    if (t_nodes < 4 * stencil_pairs + 2)
      throw std::invalid_argument("grid: too few t-nodes for the stencil");
    if (circle_nodes < 64 || (circle_nodes & (circle_nodes - 1)) != 0)
      throw std::invalid_argument("grid: circle_nodes must be a power of two >= 64");
  }
};

}  // namespace detbound
