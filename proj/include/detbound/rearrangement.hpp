#pragma once

// Nonincreasing rearrangement on the half line and the monotone envelope
//   u(t) = f(0) + int_0^t (f')^*(s) ds.
//
// Samples are read as a step function: cell [s_k, s_{k+1}) carries the value at
// its left node. Sorting cells by value (weighted by width) is then an exact
// rearrangement; on a uniform grid it is a permutation of the cell values.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "detbound/errors.hpp"

namespace detbound {

class HalfLineFunction {
 public:
  HalfLineFunction(std::vector<double> s, std::vector<double> values, std::vector<double> derivative = {})
      : s_(std::move(s)), v_(std::move(values)), d_(std::move(derivative)) {
    if (s_.size() < 2) throw std::invalid_argument("HalfLineFunction: need at least two nodes");
    if (s_.size() != v_.size()) throw std::invalid_argument("HalfLineFunction: grid and values differ in length");
    if (!d_.empty() && d_.size() != s_.size())
      throw std::invalid_argument("HalfLineFunction: derivative samples differ in length");
    if (s_.front() != 0.0) throw std::invalid_argument("HalfLineFunction: grid must start at 0");
    for (std::size_t k = 1; k < s_.size(); ++k)
      if (!(s_[k] > s_[k - 1])) throw std::invalid_argument("HalfLineFunction: grid must be increasing");
    for (double x : v_)
      if (!std::isfinite(x)) throw std::invalid_argument("HalfLineFunction: non-finite value");
    for (double x : d_)
      if (!std::isfinite(x)) throw std::invalid_argument("HalfLineFunction: non-finite derivative");
  }

  // Uniform grid on [0, length] with `nodes` samples of fn (and optionally dfn).
  template <class Fn>
  static HalfLineFunction sample(double length, int nodes, Fn&& fn) {
    std::vector<double> s(nodes), v(nodes);
    for (int k = 0; k < nodes; ++k) {
      s[k] = length * k / (nodes - 1);
      v[k] = fn(s[k]);
    }
    s[0] = 0.0;
    return HalfLineFunction(std::move(s), std::move(v));
  }

  template <class Fn, class DFn>
  static HalfLineFunction sample(double length, int nodes, Fn&& fn, DFn&& dfn) {
    std::vector<double> s(nodes), v(nodes), d(nodes);
    for (int k = 0; k < nodes; ++k) {
      s[k] = length * k / (nodes - 1);
      v[k] = fn(s[k]);
      d[k] = dfn(s[k]);
    }
    s[0] = 0.0;
    return HalfLineFunction(std::move(s), std::move(v), std::move(d));
  }

  std::size_t size() const { return s_.size(); }
  std::span<const double> grid() const { return s_; }
  std::span<const double> values() const { return v_; }
  std::span<const double> derivative() const { return d_; }
  bool has_derivative() const { return !d_.empty(); }
  double length() const { return s_.back(); }
  double width(std::size_t cell) const { return s_[cell + 1] - s_[cell]; }

  // Slopes of the piecewise-linear interpolant, one per cell.
  std::vector<double> cell_slopes() const {
    std::vector<double> out(s_.size() - 1);
    for (std::size_t k = 0; k + 1 < s_.size(); ++k) out[k] = (v_[k + 1] - v_[k]) / width(k);
    return out;
  }

  // u'(x): linear interpolation of derivative samples if present, else the
  // slope of the cell containing x (right-continuous).
  double slope_at(double x) const {
    if (x <= 0.0) return d_.empty() ? (v_[1] - v_[0]) / width(0) : d_.front();
    if (x >= s_.back()) {
      const std::size_t c = s_.size() - 2;
      return d_.empty() ? (v_[c + 1] - v_[c]) / width(c) : d_.back();
    }
    const std::size_t c = static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), x) - s_.begin()) - 1;
    if (d_.empty()) return (v_[c + 1] - v_[c]) / width(c);
    const double tau = (x - s_[c]) / width(c);
    return (1.0 - tau) * d_[c] + tau * d_[c + 1];
  }

 private:
  std::vector<double> s_;
  std::vector<double> v_;
  std::vector<double> d_;
};

namespace detail {

// Sorts cell values (nonincreasing) and re-averages them onto the original
// cells. Exact permutation when all cells have equal width.
inline std::vector<double> rearrange_cells(std::span<const double> cell_values, std::span<const double> widths) {
  const std::size_t n = cell_values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cell_values[a] > cell_values[b]; });

  const bool uniform = std::all_of(widths.begin(), widths.end(),
                                   [&](double w) { return std::abs(w - widths[0]) <= 1e-12 * widths[0]; });
  std::vector<double> out(n, 0.0);
  if (uniform) {
    for (std::size_t k = 0; k < n; ++k) out[k] = cell_values[order[k]];
    return out;
  }
  // Lay sorted pieces end to end and average over each target cell.
  std::size_t piece = 0;
  double piece_left = widths[order[0]];
  for (std::size_t k = 0; k < n; ++k) {
    double need = widths[k];
    double acc = 0.0;
    while (need > 0.0 && piece < n) {
      const double take = std::min(need, piece_left);
      acc += take * cell_values[order[piece]];
      need -= take;
      piece_left -= take;
      if (piece_left <= 1e-15 * widths[k]) {
        ++piece;
        if (piece < n) piece_left = widths[order[piece]];
      }
    }
    out[k] = acc / widths[k];
  }
  return out;
}

}  // namespace detail

// Nonincreasing rearrangement g* of g on the sampled window, over the full
// signed range. Rejects samples that do not decay at the window end.
inline HalfLineFunction decreasing_rearrangement(const HalfLineFunction& g, double tail_tol = 1e-6) {
  const auto v = g.values();
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  if (std::abs(v.back()) > tail_tol * std::max(peak, 1e-300) && peak > 0.0)
    throw DivergenceError("decreasing_rearrangement: input does not decay at the window end (|g(end)| = " +
                          std::to_string(std::abs(v.back())) + ")");
  const std::size_t cells = g.size() - 1;
  std::vector<double> widths(cells);
  for (std::size_t k = 0; k < cells; ++k) widths[k] = g.width(k);
  auto sorted = detail::rearrange_cells(v.first(cells), widths);
  std::vector<double> out(sorted);
  out.push_back(sorted.back());
  return HalfLineFunction(std::vector<double>(g.grid().begin(), g.grid().end()), std::move(out));
}

// u = f(0) + int_0^t (f')^*: same endpoints and energy as f, concave, u >= f.
// f' is taken cellwise from the samples, so the result is piecewise linear.
inline HalfLineFunction monotone_envelope(const HalfLineFunction& f) {
  const std::size_t cells = f.size() - 1;
  const auto slopes = f.cell_slopes();
  std::vector<double> widths(cells);
  for (std::size_t k = 0; k < cells; ++k) widths[k] = f.width(k);
  const auto sorted = detail::rearrange_cells(slopes, widths);
  std::vector<double> u(f.size()), du(f.size());
  u[0] = f.values()[0];
  for (std::size_t k = 0; k < cells; ++k) {
    u[k + 1] = u[k] + sorted[k] * widths[k];
    du[k] = sorted[k];
  }
  du[cells] = sorted[cells - 1];
  return HalfLineFunction(std::vector<double>(f.grid().begin(), f.grid().end()), std::move(u), std::move(du));
}

// int_0^L g^k over the step-function reading of the samples.
inline double step_moment(const HalfLineFunction& g, int power) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) s += std::pow(g.values()[k], power) * g.width(k);
  return s;
}

// int_0^L u'^2 for the piecewise-linear interpolant.
inline double slope_energy(const HalfLineFunction& u) {
  double s = 0.0;
  const auto sl = u.cell_slopes();
  for (std::size_t k = 0; k < sl.size(); ++k) s += sl[k] * sl[k] * u.width(k);
  return s;
}

}  // namespace detbound
