#pragma once

// Smooth matrix-valued families over (t, s, p₁…p_m) with derivative jets.
//
// Every loop, plot, cylinder and plot of cylinders in the library is a view
// onto one of these. Variable 0 is loop time t, variable 1 is the path
// parameter s, variables 2.. are plot parameters. Nodes compose (products,
// inverses, block sums, concatenation, exponentials of scalar-weighted
// generators) and propagate exact first derivatives; arbitrary user
// callables fall back to central differences.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lchern/matrixcore.hpp"

namespace lchern {

inline constexpr int kVarT = 0;
inline constexpr int kVarS = 1;
inline constexpr int kVarP0 = 2;
constexpr int var_p(int i) { return kVarP0 + i; }

struct Coords {
  double t = 0.0;
  double s = 0.0;
  std::vector<double> p;

  double get(int var) const;
  void set(int var, double value);
};

struct Jet {
  CMat value;
  std::vector<CMat> d;  // one entry per requested variable, in request order
};

class Family {
 public:
  virtual ~Family() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  /// Value and the partial derivatives in `vars` at `c`.
  virtual Jet eval(const Coords& c, std::span<const int> vars) const = 0;

  CMat value(const Coords& c) const;
  CMat partial(const Coords& c, int var) const;
};

using FamilyPtr = std::shared_ptr<const Family>;

/// Real scalar coefficient with gradient, used to weight exponent generators.
struct ScalarFn {
  std::function<double(const Coords&)> value;
  std::function<double(const Coords&, int)> partial;
};

ScalarFn scalar_constant(double c);
ScalarFn scalar_var(int var);
/// sin(2π·freq·t): vanishes at t = 0, 1 and is periodic with all derivatives.
ScalarFn scalar_sin2pi_t(int freq = 1);
ScalarFn scalar_cos2pi_t(int freq = 1);
ScalarFn scalar_product(ScalarFn a, ScalarFn b);
ScalarFn scalar_sum(ScalarFn a, ScalarFn b);

struct ExpTerm {
  ScalarFn weight;
  CMat generator;
};

FamilyPtr constant_family(const CMat& g);
/// exp(Σ_k weight_k · generator_k).
FamilyPtr exp_family(std::vector<ExpTerm> terms);
FamilyPtr product_family(FamilyPtr a, FamilyPtr b);
FamilyPtr inverse_family(FamilyPtr a);
FamilyPtr block_diag_family(FamilyPtr a, FamilyPtr b);
/// Runs a on var ∈ [0,½] and b on [½,1], each through the flat reparametrizer.
FamilyPtr concat_family(FamilyPtr a, FamilyPtr b, int var = kVarT);
/// Σ_k coeffs[k] e^{2πi(k+kmin)t}.
FamilyPtr fourier_family(std::vector<CMat> coeffs, int kmin);
/// Replaces s and/or p by fixed values; derivatives in pinned variables vanish.
FamilyPtr pinned_family(FamilyPtr base, std::optional<double> s, std::optional<std::vector<double>> p);

struct LambdaOptions {
  double fd_step = 1e-4;
  bool richardson = false;
};

/// User callable; `partial` may be empty, in which case derivatives come from
/// central differences with the given step.
FamilyPtr lambda_family(Eigen::Index rows, Eigen::Index cols, std::function<CMat(const Coords&)> value,
                        std::function<CMat(const Coords&, int)> partial = {}, LambdaOptions options = {});

/// Flat reparametrizer φ: [0,1] → [0,1], φ(u) = ∫₀ᵘψ / ∫₀¹ψ with
/// ψ(u) = exp(−1/(u(1−u))). All derivatives of φ vanish at 0 and 1.
double flat_reparam(double u);
double flat_reparam_derivative(double u);

}  // namespace lchern
