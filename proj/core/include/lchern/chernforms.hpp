#pragma once

// Named forms compiled to weighted SlotSequence lists:
//   ChOdd         Tr Σ (−1)ⁿ n!/(2n+1)! ω^{2n+1}
//   CSOdd         Tr Σ (−1)ⁿ n!/(2n)! ∫₀¹ (g⁻¹∂g)(g⁻¹dg)^{2n}
//   CSConnection  Tr ∫₀¹ Σ 1/(n+1)! Σ_i R_s…A′_s…R_s ds  (A′_s in slot i)
//   TrHolEven     Σ_m Σ_{j₁<…<j_k} Tr ∫_{Δᵐ} (R at j's, ιA elsewhere)
//   BCSEven       Σ_n Σ_{r, j₁<…<j_k} Tr ∫₀¹∫_{Δⁿ} (A′_s at r, R_s at j's, ιA_s elsewhere)
//   BChOdd        Σ_n c(n,k) Σ_{r, j₁<…<j_k} Tr ∫_{Δⁿ} (ω at r, ω² at j's, ιω elsewhere)
//   BCSOdd        Σ_n c(n,k) Σ_{r, j's} ∫₀¹∫_{Δⁿ} [(ω(∂_s) at r) ± (ω at r, ω²(·,∂_s) at one j)]
// with c(n,k) = (−1)ᵏ(n−1)!k!/(n+k)!. The marked positions j form a set, so
// the last three sums have n·C(n−1,k) position choices per n.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lchern/formeval.hpp"

namespace lchern {

enum class FormName { ChOdd, CSOdd, CSConnection, TrHolEven, BCSEven, BChOdd, BCSOdd };

/// Kebab-case CLI name ("bch-odd").
std::string to_string(FormName name);
/// Accepts the kebab-case name or the CamelCase enumerator name.
FormName parse_form_name(const std::string& text);
/// Parity of the degrees the form lives in: 1 for odd, 0 for even.
int form_parity(FormName name);

inline constexpr int kDefaultMaxDegree = 3;
inline constexpr int kDefaultNMax = 10;

struct FormSpec {
  FormName name = FormName::BChOdd;
  int degree = 0;
  int n_max = kDefaultNMax;
  std::vector<SlotSequence> terms;
};

/// Throws Parity on a degree of the wrong parity, Configuration when the
/// degree exceeds `max_degree` or n_max cannot reach the lowest word length.
FormSpec build_form_spec(FormName name, int degree, int n_max = kDefaultNMax, int max_degree = kDefaultMaxDegree);

/// (−1)ᵏ(n−1)!k!/(n+k)!.
double bch_coefficient(int n, int k);
/// Σ_{n=k+1}^{n_max} n·C(n−1,k).
std::uint64_t bch_term_count(int k, int n_max);

struct FormValue {
  Complex value{0.0, 0.0};
  double scale = 0.0;
  double std_error = 0.0;
  /// Upper bound on the omitted series terms n > n_max (0 for finite formulas).
  double tail_bound = 0.0;
  int n_max = 0;
};

/// Smallest n_max ≥ floor whose tail bound for Contract norm `contract_norm`
/// falls below `target`.
int suggest_n_max(double contract_norm, int k, double target, int floor = kDefaultNMax);

/// Ch at the point g on tangent vectors V_i ∈ T_gU(n).
FormValue ch_odd(const CMat& g, std::span<const CMat> vectors, int max_degree = kDefaultMaxDegree);

/// CS of a path of maps: `path` is t ↦ g_t at a fixed plot point and the
/// vectors are plot directions over it.
FormValue cs_odd(const Curve& path, std::span<const TangentField> vectors, const QuadratureSpec& quad,
                 int max_degree = kDefaultMaxDegree);
/// Same on a cylinder whose path parameter is s (loops constant in t).
FormValue cs_odd(const CylinderMap& cylinder, std::span<const CylinderField> vectors, const QuadratureSpec& quad,
                 int max_degree = kDefaultMaxDegree);

/// CS(∇_s) of a path of connections along `base`.
FormValue cs_connection(const Curve& base, const ConnectionPath& path, std::span<const TangentField> vectors,
                        const QuadratureSpec& quad, int max_degree = kDefaultMaxDegree);

struct WindingResult {
  Complex raw{0.0, 0.0};  // Tr ∫ γ⁻¹γ′ dt
  long long rounded = 0;  // nearest integer to raw/2πi
  double residual = 0.0;  // |raw/2πi − rounded|
  bool integral = true;   // residual ≤ 0.01
};
WindingResult winding_number(const Curve& loop, const QuadratureSpec& quad);

FormValue tr_hol_even(const Curve& base, const ConnectionData& connection, int k, std::span<const TangentField> vectors,
                      int n_max, const QuadratureSpec& quad, int max_degree = kDefaultMaxDegree);

FormValue bcs_even(const Curve& base, const ConnectionPath& path, int k, std::span<const TangentField> vectors,
                   int n_max, const QuadratureSpec& quad, int max_degree = kDefaultMaxDegree);

FormValue bch_odd(const UnitaryLoop& loop, int k, std::span<const TangentField> vectors, int n_max,
                  const QuadratureSpec& quad, int max_degree = kDefaultMaxDegree);

FormValue bcs_odd(const CylinderMap& cylinder, int k, std::span<const CylinderField> vectors, int n_max,
                  const QuadratureSpec& quad, int max_degree = kDefaultMaxDegree);

}  // namespace lchern
