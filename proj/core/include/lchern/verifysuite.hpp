#pragma once

// Numerical checks of the identities satisfied by the forms: (d+ι)-closure,
// restriction to constant loops, transgression, additivity, holonomy and
// the abelian tensor rule. Each check returns a CheckReport.
//
// Closure and transgression are checked on pullbacks to finite-dimensional
// plots: d is a central-difference exterior derivative in the plot
// parameters and ι is evaluated directly with γ′.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lchern/chernforms.hpp"

namespace lchern {

inline constexpr double kScaleFloor = 1e-12;
/// Reports whose scale falls below this are labelled degenerate.
inline constexpr double kDegenerateScale = 1e-10;

/// (A − A†)/2·scale with A having standard complex Gaussian entries drawn
/// from the counter-based generator.
CMat random_anti_hermitian(int n, std::uint64_t seed, double scale = 1.0);
/// e^X for X = random_anti_hermitian(n, seed, scale).
CMat random_unitary(int n, std::uint64_t seed, double scale = 1.0);

/// residual ≤ tolerance · max(scale, kScaleFloor).
bool within_tolerance(double residual, double tolerance, double scale);

struct ErrorBudget {
  double quadrature = 0.0;  // change of the non-FD side when grid_t is halved
  double truncation = 0.0;  // sum of series tail bounds
  double fd = 0.0;          // |r(h) − r(h/2)| of the h-sweep
};

struct CheckReport {
  std::string name;
  std::string kind;
  std::string digest;
  double residual = 0.0;
  double scale = 0.0;
  double tolerance = 0.0;
  std::vector<std::pair<double, double>> convergence;  // (h, residual)
  std::optional<double> observed_order;
  double min_order = 0.0;
  ErrorBudget budget;
  int n_max = 0;
  bool degenerate = false;
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  QuadratureSpec quad;
  double tolerance = 1e-6;
  /// 0 picks n_max from the sup norm of the contraction payload and raises
  /// it until the tail bound is below 1% of tolerance·scale.
  int n_max = 0;
  double h = 1e-3;
  int h_steps = 3;         // h, h/2, h/4, …
  double min_order = 0.0;  // required observed FD order when > 0
  bool quadrature_budget = true;
  int max_degree = kDefaultMaxDegree;
};

/// Fills residual/scale/tolerance derived fields (passed, degenerate).
void finalize(CheckReport& report);

/// Even-degree component of (d+ι)BCh pulled back to the plot at p:
/// degree 0 is |BCh₁(γ; γ′)|, degree 2k is max over increasing index tuples I
/// of |d(F*BCh_{2k−1})_I + BCh_{2k+1}(γ′, ∂_I)|.
CheckReport check_closure(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& options);

/// |BCh − Ch| (odd degree) on the first `degree` plot directions; the plot
/// must consist of constant loops.
CheckReport check_restriction(const LoopPlot& plot, int degree, std::span<const double> p,
                              const CheckOptions& options);
/// |BCS − CS| (even degree) on a plot of t-constant cylinders.
CheckReport check_restriction_bcs(const CylinderPlot& plot, int degree, std::span<const double> p,
                                  const CheckOptions& options);

/// Odd-degree component 2m+1 of (d+ι)BCS = BCh(γ₁) − BCh(γ₀) at p, max over
/// increasing index tuples.
CheckReport check_transgression(const CylinderPlot& plot, int degree, std::span<const double> p,
                                const CheckOptions& options);
/// dCS_{2m} = Ch_{2m+1}(g₁) − Ch_{2m+1}(g₀) on a plot of t-constant cylinders.
CheckReport check_map_transgression(const CylinderPlot& plot, int degree, std::span<const double> p,
                                    const CheckOptions& options);

/// Ch(g) = CS(d, d + g⁻¹dg) on a map-plot (constant loops), odd degree.
CheckReport check_gauge_cs(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& options);

/// BCh (loop-group formula) against BCS of the straight gauge path, odd degree.
CheckReport check_route(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& options);
/// Same on arbitrary fields over one loop; the degree is the number of fields.
CheckReport check_route(const UnitaryLoop& loop, std::span<const TangentField> fields, const CheckOptions& options);

/// `count` left-translated fields γ·ξ_i with ξ_i a random anti-Hermitian
/// trigonometric polynomial of the given number of modes.
std::vector<TangentField> random_fourier_fields(const Curve& loop, int count, std::uint64_t seed, int modes = 2,
                                                double scale = 0.5);

enum class AdditivityMode { DirectSum, Concat, Inverse };
std::string to_string(AdditivityMode mode);
AdditivityMode parse_additivity_mode(const std::string& text);

/// DirectSum: BCh (odd degree) or BCS (even degree) of the block sum of two
/// plots against the sum of the parts; both plots share the parameters.
/// Concat: BCS (even degree) of the s-concatenation of two cylinder plots,
/// which must join at s = 1 / s = 0.
/// Inverse: Ch (odd degree, at s = t = 0) or CS (even degree) of the
/// pointwise inverse of a map-cylinder plot against minus the original.
/// `b` is ignored for Inverse. For DirectSum the inputs are read as loop
/// plots when the degree is odd.
CheckReport check_additivity(AdditivityMode mode, const FamilyPtr& a, const FamilyPtr& b, int param_dim, int degree,
                             std::span<const double> p, const CheckOptions& options);

/// |w(γ) − expected| with w = (1/2πi)∫Tr γ⁻¹γ′ and an absolute tolerance.
CheckReport check_winding(const UnitaryLoop& loop, long long expected, const CheckOptions& options);

/// w(γ₁∗γ₂) = w(γ₁) + w(γ₂) on the raw integrals.
CheckReport check_winding_concat(const UnitaryLoop& a, const UnitaryLoop& b, const CheckOptions& options);

/// Holonomy data along the unit interval: base t ↦ t in ℝ¹ and a u(n)-valued
/// connection whose contraction is X(t).
struct LineConnection {
  Curve base;
  ConnectionData connection;
  std::function<CMat(double)> contraction;
};

/// X(t) = Σ_{k<modes} a_k cos 2πkt + b_k sin 2πkt with anti-Hermitian
/// Gaussian coefficients, rescaled so that max_t ‖X(t)‖₂ = sup_norm.
LineConnection random_line_connection(int n, std::uint64_t seed, double sup_norm, int modes = 3);

/// Tr hol from the k = 0 series against Tr of the RK4 path-ordered
/// exponential (relative to |Tr hol|).
CheckReport check_holonomy(const LineConnection& input, const CheckOptions& options, int ode_steps = 4000);

/// Abelian line-bundle connection on ℝᵐ: A(v) = i(a·v + (b·x)(c·v)),
/// R(v,w) = i((b·v)(c·w) − (b·w)(c·v)), pulled back along `base` (m×1).
ConnectionData abelian_connection(const Curve& base, std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c);
/// Connection of the tensor product of two line bundles (A₁ + A₂).
ConnectionData tensor_connection(const ConnectionData& first, const ConnectionData& second);

/// TrHol(∇⊗∇̄) = TrHol(∇) ∧ TrHol(∇̄) in degrees 0 and 2 on (V, W).
CheckReport check_tensor(const Curve& base, const ConnectionData& first, const ConnectionData& second,
                         std::span<const TangentField> vectors, const CheckOptions& options);

// --- suites -----------------------------------------------------------------

struct CheckSpec {
  std::string name;
  std::string kind;
  std::string params_json;  // check parameters as a JSON object
};

struct SuiteConfig {
  std::string name = "suite";
  QuadratureSpec quad;
  double default_tolerance = 1e-6;
  std::vector<CheckSpec> checks;
  std::string config_json = "{}";  // echoed into the report
  std::string base_dir = ".";      // for relative input paths
};

struct SuiteResult {
  std::string name;
  std::string config_json;
  std::vector<CheckReport> reports;  // sorted by name, then digest
  int passed = 0;
  int failed = 0;
  bool all_passed() const { return failed == 0; }
};

/// Runs one check described by JSON parameters. Throws Configuration/Input
/// on a malformed description.
CheckReport run_check(const CheckSpec& spec, const SuiteConfig& config);

/// Runs the checks in parallel; the result does not depend on thread count.
SuiteResult run_suite(const SuiteConfig& config);

/// FNV-1a 64 as 16 hex digits.
std::string digest_hex(const std::string& text);

}  // namespace lchern
