#include "lchern/quadrature.hpp"

namespace lchern {

std::string to_string(QuadratureRule rule) {
  return rule == QuadratureRule::Simpson ? "simpson" : "trapezoid";
}

QuadratureRule parse_rule(const std::string& name) {
  if (name == "simpson") return QuadratureRule::Simpson;
  if (name == "trapezoid") return QuadratureRule::Trapezoid;
  throw Error(ErrorCode::Configuration, "unknown quadrature rule '" + name + "'");
}

void QuadratureSpec::validate() const {
  if (grid_t < 8) throw Error(ErrorCode::Configuration, "grid_t must be >= 8");
  if (grid_s < 2) throw Error(ErrorCode::Configuration, "grid_s must be >= 2");
  if (rule == QuadratureRule::Simpson && (grid_t % 2 != 0 || grid_s % 2 != 0))
    throw Error(ErrorCode::Configuration, "simpson requires an even number of subintervals");
  if (mc_samples < 0) throw Error(ErrorCode::Configuration, "mc_samples must be >= 0");
}

std::vector<double> rule_weights(int intervals, QuadratureRule rule) {
  if (intervals < 1) throw Error(ErrorCode::Configuration, "rule_weights: need >= 1 interval");
  const double h = 1.0 / intervals;
  std::vector<double> w(intervals + 1, h);
  if (rule == QuadratureRule::Trapezoid) {
    w.front() = w.back() = 0.5 * h;
    return w;
  }
  if (intervals % 2 != 0)
    throw Error(ErrorCode::Configuration, "simpson requires an even number of subintervals");
  for (int i = 0; i <= intervals; ++i) w[i] = h / 3.0 * (i == 0 || i == intervals ? 1.0 : (i % 2 ? 4.0 : 2.0));
  return w;
}

void cumulative_integral(std::span<const Complex> f, std::span<Complex> out, QuadratureRule rule) {
  const std::size_t nodes = f.size();
  if (nodes < 2 || out.size() != nodes)
    throw Error(ErrorCode::Configuration, "cumulative_integral: bad grid");
  const std::size_t m = nodes - 1;
  const double h = 1.0 / static_cast<double>(m);
  out[0] = 0.0;
  if (rule == QuadratureRule::Trapezoid) {
    for (std::size_t i = 1; i < nodes; ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    return;
  }
  if (m % 2 != 0) throw Error(ErrorCode::Configuration, "simpson requires an even number of subintervals");
  for (std::size_t i = 0; i + 2 < nodes; i += 2) {
    out[i + 1] = out[i] + h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
    out[i + 2] = out[i] + h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace lchern
