#pragma once

// Dense complex matrix utilities: unitary-group helpers, the matrix
// exponential and the path-ordered exponential (holonomy).

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lchern {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

// Error categories raised across the library. Every failure is reported by
// throwing lchern::Error; the CLI maps categories to exit codes.
enum class ErrorCode {
  Dimension,
  Configuration,
  NotALoop,
  NonUnitary,
  EndpointMismatch,
  Arity,
  Parity,
  WrongBase,
  NonProjector,
  Domain,
  Input,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

CMat identity(int n);
bool all_finite(const CMat& m);

/// Largest absolute column sum.
double norm1(const CMat& m);
/// Largest singular value.
double norm2(const CMat& m);

bool is_anti_hermitian(const CMat& x, double tol = 1e-12);
bool is_unitary(const CMat& g, double tol = 1e-9);

/// ‖U†U − I‖ (max entry).
double unitarity_defect(const CMat& g);

/// e^X by scaling and squaring: X is scaled by 2^-s until ‖X‖₁ ≤ 0.5, the
/// exponential of the scaled matrix is taken from a degree-18 Taylor
/// polynomial and then squared s times.
CMat expm(const CMat& x);

/// Directional (Fréchet) derivative d/dε e^{X + εE} at ε = 0, read off the
/// upper-right block of exp([[X, E], [0, X]]).
CMat expm_frechet(const CMat& x, const CMat& e);

CMat block_diag(const CMat& a, const CMat& b);

/// a ⊕ I_{m−n}: the stabilization of a ∈ U(n) into U(m).
CMat pad_identity(const CMat& a, int m);

/// Solution at t = 1 of h′(t) = h(t)·X(t), h(0) = I, by classical RK4 with
/// `steps` uniform steps.
CMat path_ordered_exp(const std::function<CMat(double)>& x, int steps);

Complex trace(const CMat& m);

}  // namespace lchern
