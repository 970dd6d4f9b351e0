#pragma once

// Generic evaluator for words of time-indexed forms.
//
// A SlotSequence is one summand of an iterated-integral formula: an ordered
// list of slots, each standing for a matrix-valued form of degree 0, 1 or 2
// at its own time t_j (t₁ < … < t_n), or all at one time for pointwise
// words. Evaluation on a tuple of tangent vectors distributes the vectors
// over the slots by shuffles (no 1/p!q! factors), multiplies the factors in
// slot order, traces, and integrates over the simplex (and optionally over
// the path parameter s).

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lchern/loopgeom.hpp"
#include "lchern/quadrature.hpp"

namespace lchern {

enum class SlotKind { Contract, OneForm, TwoForm, SDerivOneForm, SDerivTwoForm };

std::string to_string(SlotKind kind);
SlotKind parse_slot_kind(const std::string& name);
/// Contract 0, OneForm/SDerivOneForm 1, TwoForm/SDerivTwoForm 2.
int default_degree(SlotKind kind);

/// `degree` is the number of tangent vectors the slot consumes. It defaults
/// to the kind's degree; s-derivative slots of a cylinder form carry one
/// less, since one argument is taken by ∂/∂s.
struct Slot {
  SlotKind kind = SlotKind::Contract;
  int degree = 0;

  Slot() = default;
  Slot(SlotKind k) : kind(k), degree(default_degree(k)) {}
  Slot(SlotKind k, int d) : kind(k), degree(d) {}
  bool operator==(const Slot&) const = default;
};

enum class TimeMode {
  Simplex,    // ∫_{Δⁿ} X₁(t₁)···X_n(t_n)
  Pointwise,  // ∫₀¹ X₁(t)···X_n(t) dt
};

struct SlotSequence {
  Complex coeff{1.0, 0.0};
  std::vector<Slot> slots;
  bool s_integrated = false;
  TimeMode time = TimeMode::Simplex;

  int total_degree() const;
};

/// A slot kind together with the set of input vectors assigned to it
/// (bit i set ⇔ vector i). Two-form masks list their vectors in increasing
/// order: mask {a,b} with a < b means payload(V_a, V_b).
struct FactorKey {
  SlotKind kind = SlotKind::Contract;
  std::uint32_t mask = 0;
  auto operator<=>(const FactorKey&) const = default;
};

/// Source of slot payload values at (s, t) for a fixed tuple of vectors.
class SlotBinding {
 public:
  virtual ~SlotBinding() = default;
  virtual Eigen::Index dim() const = 0;
  /// Number of tangent vectors bound.
  virtual int arity() const = 0;
  virtual bool s_dependent() const { return false; }
  /// out[i] = value of keys[i] at (s, t).
  virtual void factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const = 0;
};

struct EvalResult {
  Complex value{0.0, 0.0};
  double scale = 0.0;         // Σ |contribution| over words, shuffles and s nodes
  double std_error = 0.0;     // Monte-Carlo standard error (0 when deterministic)
  double contract_sup = 0.0;  // max Frobenius norm of the Contract payload on the grid, 0 if none
  double payload_sup = 0.0;   // same over every other slot payload
};

/// Σ_terms coeff · Σ_shuffles sgn · Tr ∫ (factors). Throws Arity when a term's
/// degree differs from the binding's arity.
EvalResult evaluate_terms(std::span<const SlotSequence> terms, const SlotBinding& binding, const QuadratureSpec& quad);

/// ∫_{t₁<…<t_n} f₁(t₁)···f_n(t_n) by the cumulative recursion; n = 0 gives I
/// of size `dim`.
CMat iterated_integral(std::span<const std::function<CMat(double)>> fns, const QuadratureSpec& quad, int dim = 1);

/// Signed order-preserving distributions of vectors 0..d−1 over slots of
/// the given degrees: each entry is (sign, one mask per slot).
struct Shuffle {
  int sign = 1;
  std::vector<std::uint32_t> masks;
};
std::vector<Shuffle> shuffles(std::span<const int> degrees);

// --- bindings ---------------------------------------------------------------

/// ω = g⁻¹dg along a curve: Contract ιω = γ⁻¹γ′, OneForm γ⁻¹V,
/// TwoForm ω²(V,W) = [γ⁻¹V, γ⁻¹W].
class MaurerCartanBinding : public SlotBinding {
 public:
  MaurerCartanBinding(Curve base, std::vector<TangentField> vectors);
  Eigen::Index dim() const override { return base_.rows(); }
  int arity() const override { return static_cast<int>(vectors_.size()); }
  void factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const override;

 private:
  Curve base_;
  std::vector<TangentField> vectors_;
};

/// A connection along a loop: Contract A(γ′), OneForm A(V), TwoForm R(V,W).
class ConnectionBinding : public SlotBinding {
 public:
  ConnectionBinding(Curve base, ConnectionData connection, std::vector<TangentField> vectors);
  Eigen::Index dim() const override { return connection_.rank; }
  int arity() const override { return static_cast<int>(vectors_.size()); }
  void factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const override;

 private:
  Curve base_;
  ConnectionData connection_;
  std::vector<TangentField> vectors_;
};

/// Path of connections: as ConnectionBinding at each s, plus
/// SDerivOneForm A′_s(V) (degree 1).
class ConnectionPathBinding : public SlotBinding {
 public:
  ConnectionPathBinding(Curve base, ConnectionPath path, std::vector<TangentField> vectors);
  Eigen::Index dim() const override { return path_.rank; }
  int arity() const override { return static_cast<int>(vectors_.size()); }
  bool s_dependent() const override { return true; }
  void factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const override;

 private:
  Curve base_;
  ConnectionPath path_;
  std::vector<TangentField> vectors_;
};

/// Maurer-Cartan data of a cylinder Γ(s,t) with the ∂/∂s direction
/// available: SDerivOneForm of degree 0 is ω(∂_s) = Γ⁻¹∂_sΓ and
/// SDerivTwoForm of degree 1 is ω²(V, ∂_s) = [Γ⁻¹V, Γ⁻¹∂_sΓ].
class CylinderBinding : public SlotBinding {
 public:
  CylinderBinding(CylinderMap cylinder, std::vector<CylinderField> vectors);
  Eigen::Index dim() const override { return cylinder_.dim(); }
  int arity() const override { return static_cast<int>(vectors_.size()); }
  bool s_dependent() const override { return true; }
  void factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const override;

 private:
  CylinderMap cylinder_;
  std::vector<CylinderField> vectors_;
};

// --- conveniences -----------------------------------------------------------

Complex eval_slot_sequence(const Curve& base, const SlotSequence& seq, std::span<const TangentField> vectors,
                           const QuadratureSpec& quad);
Complex eval_slot_sequence(const Curve& base, const ConnectionPath& path, const SlotSequence& seq,
                           std::span<const TangentField> vectors, const QuadratureSpec& quad);
Complex eval_slot_sequence(const CylinderMap& cylinder, const SlotSequence& seq,
                           std::span<const CylinderField> vectors, const QuadratureSpec& quad);

/// A loop-space form: value at a loop on a tuple of fields over it.
using LoopForm = std::function<Complex(const UnitaryLoop&, std::span<const TangentField>)>;

/// form(γ; γ′, V₁, …, V_{k−1}).
Complex contract_rotation(const UnitaryLoop& loop, const LoopForm& form, std::span<const TangentField> vectors);

/// Component p ↦ form(plot.at(p); ∂_{i₁}, …, ∂_{i_k}).
std::function<Complex(std::span<const double>)> pullback_to_plot(LoopForm form, LoopPlot plot,
                                                                 std::vector<int> indices);

/// α_{i₁…i_k}(p) for an arbitrary index tuple.
using PlotComponent = std::function<Complex(std::span<const double>, std::span<const int>)>;

struct Box {
  std::vector<double> lower, upper;
};

/// (dα)_{i₀…i_k}(p) = Σ_j (−1)ʲ ∂_{i_j} α_{i₀…î_j…i_k}(p), central differences
/// with step h. Throws Domain when p is within h of the box boundary.
Complex fd_exterior_derivative(const PlotComponent& alpha, std::span<const double> p, std::span<const int> indices,
                               double h, const Box* box = nullptr);

}  // namespace lchern
