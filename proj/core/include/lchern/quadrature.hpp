#pragma once

// Quadrature configuration shared by every integral over [0,1], over the
// simplex Δⁿ and over the transgression interval.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lchern/matrixcore.hpp"

namespace lchern {

enum class QuadratureRule { Trapezoid, Simpson };

std::string to_string(QuadratureRule rule);
QuadratureRule parse_rule(const std::string& name);

struct QuadratureSpec {
  int grid_t = 256;  // subintervals of the loop time grid
  int grid_s = 64;   // subintervals of the transgression grid
  QuadratureRule rule = QuadratureRule::Simpson;
  int mc_samples = 0;  // 0 = deterministic simplex recursion
  std::uint64_t seed = 0;

  /// Throws ErrorCode::Configuration unless grid_t ≥ 8, grid_s ≥ 2, and both
  /// are even under Simpson.
  void validate() const;
};

/// Weights of the composite rule on `intervals` uniform subintervals of [0,1].
std::vector<double> rule_weights(int intervals, QuadratureRule rule);

/// Cumulative integral F(t_i) = ∫₀^{t_i} f on a uniform grid with
/// `f.size() - 1` subintervals. Simpson gives O(h⁴): composite panels at even
/// nodes, a single-interval quadratic correction at odd nodes.
void cumulative_integral(std::span<const Complex> f, std::span<Complex> out, QuadratureRule rule);

/// Counter-based generator: the value depends only on (seed, stream, index),
/// so Monte-Carlo results do not depend on evaluation order.
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace lchern
