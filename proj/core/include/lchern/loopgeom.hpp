#pragma once

// Loops in U(n), tangent fields along them, finite-dimensional plots of
// loops, cylinders (paths of loops) and connection data.

#include <functional>
#include <span>
#include <vector>

#include "lchern/family.hpp"
#include "lchern/matrixcore.hpp"

namespace lchern {

/// A smooth curve t ∈ [0,1] ↦ matrix. The curve is the family evaluated at
/// a fixed (s, p) context; two curves are "the same base" when they share
/// family and context.
class Curve {
 public:
  Curve() = default;
  Curve(FamilyPtr family, Coords context = {});

  CMat value(double t) const;
  CMat velocity(double t) const;
  /// Value plus partials in `vars` at time t.
  Jet jet(double t, std::span<const int> vars) const;

  Eigen::Index rows() const { return family_->rows(); }
  Eigen::Index cols() const { return family_->cols(); }
  const FamilyPtr& family() const { return family_; }
  const Coords& context() const { return context_; }
  bool same_base(const Curve& other) const;

 protected:
  FamilyPtr family_;
  Coords context_;
};

struct LoopDiagnostics {
  double unitarity = 0.0;       // max ‖γ†γ − I‖
  double periodicity = 0.0;     // ‖γ(0) − γ(1)‖
  double velocity_gap = 0.0;    // ‖γ′(0) − γ′(1)‖
  double anti_hermitian = 0.0;  // max ‖ω + ω†‖ with ω = γ⁻¹γ′
};

LoopDiagnostics inspect_loop(const Curve& curve, int samples = 16);

/// Closed curve in U(n). Construction samples the curve and throws
/// NonUnitary / NotALoop when the invariants fail at tolerance `tol`
/// (periodicity of the velocity is held to 1e-6).
class UnitaryLoop : public Curve {
 public:
  UnitaryLoop() = default;
  explicit UnitaryLoop(FamilyPtr family, Coords context = {}, double tol = 1e-9);

  /// Skips validation; used for tabulated data whose interpolant drifts.
  static UnitaryLoop unchecked(FamilyPtr family, Coords context = {});

  int dim() const { return static_cast<int>(rows()); }
  /// ιω(t) = γ(t)⁻¹γ′(t).
  CMat maurer_cartan(double t) const;
};

/// V(t) ∈ T_{γ(t)}: a variation field along a base curve.
class TangentField {
 public:
  TangentField(Curve base, std::function<CMat(double)> fn);

  CMat operator()(double t) const { return fn_(t); }
  const Curve& base() const { return base_; }

 private:
  Curve base_;
  std::function<CMat(double)> fn_;
};

/// γ′, the rotation field defining the contraction ι.
TangentField rotation_field(const Curve& curve);
TangentField constant_field(const Curve& curve, const CMat& v);
/// V(t) = γ(t)·ξ(t); with ξ anti-Hermitian and periodic this is a valid field on a unitary loop.
TangentField left_translated_field(const Curve& curve, std::function<CMat(double)> xi);
/// ξ(t) = Σ_k a_k cos 2πkt + b_k sin 2πkt with given anti-Hermitian a_k, b_k.
TangentField fourier_left_field(const Curve& curve, std::vector<CMat> cos_coeffs, std::vector<CMat> sin_coeffs);
TangentField scaled_field(const TangentField& v, Complex lambda);
TangentField sum_field(const TangentField& a, const TangentField& b);

// --- generators -------------------------------------------------------------

/// γ(t) = g₀·e^{tX}; requires e^X = I within 1e-9.
UnitaryLoop exp_loop(const CMat& x, const CMat& g0);
UnitaryLoop exp_loop(const CMat& x);
/// X = 2πi·diag(k₁,…,k_n).
CMat winding_generator(std::span<const int> k);

UnitaryLoop constant_loop(const CMat& g);
UnitaryLoop direct_sum(const UnitaryLoop& a, const UnitaryLoop& b);
/// γ₁ on [0,½] then γ₂ on [½,1], each through the flat reparametrizer.
UnitaryLoop concat(const UnitaryLoop& a, const UnitaryLoop& b);
UnitaryLoop inverse(const UnitaryLoop& a);
UnitaryLoop product(const UnitaryLoop& a, const UnitaryLoop& b);

/// Field on γ₁ ⊕ γ₂ from fields on the summands.
TangentField direct_sum_field(const UnitaryLoop& sum, const TangentField& a, const TangentField& b);
/// Field on γ₁ ∗ γ₂ transported through the reparametrization; needs a(1) = b(0).
TangentField concat_field(const UnitaryLoop& cat, const TangentField& a, const TangentField& b);
/// d(g⁻¹)(V) = −g⁻¹ V g⁻¹, a field on γ⁻¹.
TangentField inverse_field(const UnitaryLoop& inv, const TangentField& v);

struct TabulatedLoop {
  UnitaryLoop loop;
  double unitarity_drift = 0.0;  // max ‖γ†γ − I‖ of the interpolant off the samples
};

/// Trigonometric interpolation through M ≥ 8 equispaced samples at t_j = j/M.
/// Samples must be unitary within 1e-6; no re-projection is applied.
TabulatedLoop tabulated_loop(std::span<const CMat> samples, const std::string& mode = "fourier");

// --- plots and cylinders ----------------------------------------------------

/// p ∈ ℝ^m ↦ loop, from a family in (t, p).
class LoopPlot {
 public:
  LoopPlot(FamilyPtr family, int param_dim, double tol = 1e-9);

  int param_dim() const { return param_dim_; }
  UnitaryLoop at(std::span<const double> p) const;
  /// ∂/∂p_i of the family, a field over at(p).
  TangentField partial(std::span<const double> p, int i) const;
  const FamilyPtr& family() const { return family_; }

 private:
  FamilyPtr family_;
  int param_dim_;
  double tol_;
};

/// s ∈ [0,1] ↦ loop; a map of a cylinder into U(n).
class CylinderMap {
 public:
  CylinderMap() = default;
  CylinderMap(FamilyPtr family, std::vector<double> p = {}, double tol = 1e-9);

  UnitaryLoop at(double s) const;
  /// ∂/∂s as a field over at(s).
  TangentField sderiv(double s) const;
  CMat value(double s, double t) const;
  Jet jet(double s, double t, std::span<const int> vars) const;
  int dim() const { return static_cast<int>(family_->rows()); }
  const FamilyPtr& family() const { return family_; }
  const std::vector<double>& params() const { return p_; }
  bool same_base(const CylinderMap& other) const;

 private:
  FamilyPtr family_;
  std::vector<double> p_;
};

/// Variation field V(s,t) of a cylinder.
class CylinderField {
 public:
  CylinderField(CylinderMap base, std::function<CMat(double, double)> fn);
  CMat operator()(double s, double t) const { return fn_(s, t); }
  const CylinderMap& base() const { return base_; }

 private:
  CylinderMap base_;
  std::function<CMat(double, double)> fn_;
};

/// ∂_tΓ, the circle-action field on the space of cylinders.
CylinderField cylinder_rotation_field(const CylinderMap& cyl);
/// The field V(s, ·) over the loop cyl.at(s).
TangentField slice(const CylinderField& v, double s);
CylinderField scaled_field(const CylinderField& v, Complex lambda);

class CylinderPlot {
 public:
  CylinderPlot(FamilyPtr family, int param_dim, double tol = 1e-9);
  int param_dim() const { return param_dim_; }
  CylinderMap at(std::span<const double> p) const;
  CylinderField partial(std::span<const double> p, int i) const;
  const FamilyPtr& family() const { return family_; }

 private:
  FamilyPtr family_;
  int param_dim_;
  double tol_;
};

/// Family in (t,p) ↦ γ_p(t) = base(t)·exp(sin(2πt)·(Y₀ + Σ_i p_i Y_i)).
FamilyPtr wobble_family(const Curve& base, const CMat& offset, std::vector<CMat> directions);
/// Family of constant loops p ↦ g₀·exp(Σ_i p_i A_i) (a map-plot into U(n)).
FamilyPtr translate_family(const CMat& g0, std::vector<CMat> directions);
/// Cylinder family Γ_p(s,t) = base_p(t)·exp(s·(Y₀ + Σ_i p_i Y_i)) where
/// base_p is `base` evaluated at the same p.
FamilyPtr sweep_family(FamilyPtr base, const CMat& offset, std::vector<CMat> directions);

// --- connection data --------------------------------------------------------

/// A connection pulled back along a loop: A at γ(t) on tangent v, curvature on (v, w).
struct ConnectionData {
  std::function<CMat(double, const CMat&)> one_form;
  std::function<CMat(double, const CMat&, const CMat&)> curvature;
  Eigen::Index rank = 0;
};

/// Path of connections s ↦ A_s with curvature R_s and A′_s = ∂A_s/∂s.
struct ConnectionPath {
  std::function<CMat(double, double, const CMat&)> one_form;
  std::function<CMat(double, double, const CMat&, const CMat&)> curvature;
  std::function<CMat(double, double, const CMat&)> s_deriv_one_form;
  Eigen::Index rank = 0;

  ConnectionData at(double s) const;
};

/// ∇ = P∘d on the image of a projector family P over parameter space,
/// pulled back along `base` (a curve in ℝ^m stored as an m×1 column):
/// A(v) = P·dP(v), R(v,w) = P·(dP(v)dP(w) − dP(w)dP(v)).
ConnectionData grassmann_connection(FamilyPtr projector, const Curve& base, double tol = 1e-8);

/// Straight path d + s·γ⁻¹dγ: A_s(v) = s·γ⁻¹v, R_s = −s(1−s)[γ⁻¹v, γ⁻¹w], A′_s(v) = γ⁻¹v.
ConnectionPath gauge_path_connection(const Curve& loop);

}  // namespace lchern
