#include "lchern/matrixcore.hpp"

#include <cmath>

namespace lchern {

CMat identity(int n) { return CMat::Identity(n, n); }

bool all_finite(const CMat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

double norm1(const CMat& m) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) best = std::max(best, m.col(j).cwiseAbs().sum());
  return best;
}

double norm2(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

bool is_anti_hermitian(const CMat& x, double tol) {
  if (x.rows() != x.cols()) return false;
  return (x + x.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double unitarity_defect(const CMat& g) {
  if (g.rows() != g.cols()) return INFINITY;
  return (g.adjoint() * g - CMat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

bool is_unitary(const CMat& g, double tol) { return unitarity_defect(g) <= tol; }

namespace {

void require_square(const CMat& x, const char* op) {
  if (x.rows() != x.cols() || x.rows() == 0)
    throw Error(ErrorCode::Dimension,
                std::string(op) + ": expected a non-empty square matrix, got " +
                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
}

// Taylor polynomial Σ_{k≤18} X^k/k! by Horner; ‖X‖₁ ≤ 0.5 keeps the
// truncation below 1e-21.
CMat taylor18(const CMat& x) {
  const int n = static_cast<int>(x.rows());
  const CMat id = CMat::Identity(n, n);
  CMat acc = id;
  for (int k = 18; k >= 1; --k) acc = id + (x * acc) / static_cast<double>(k);
  return acc;
}

}  // namespace

CMat expm(const CMat& x) {
  require_square(x, "expm");
  if (!all_finite(x)) throw Error(ErrorCode::Domain, "expm: non-finite input");
  const double nrm = norm1(x);
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const CMat scaled = x / std::ldexp(1.0, squarings);
  CMat e = taylor18(scaled);
  for (int i = 0; i < squarings; ++i) e = e * e;
  return e;
}

CMat expm_frechet(const CMat& x, const CMat& e) {
  require_square(x, "expm_frechet");
  if (e.rows() != x.rows() || e.cols() != x.cols())
    throw Error(ErrorCode::Dimension, "expm_frechet: direction shape mismatch");
  const Eigen::Index n = x.rows();
  CMat big = CMat::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = x;
  big.bottomRightCorner(n, n) = x;
  big.topRightCorner(n, n) = e;
  return expm(big).topRightCorner(n, n);
}

CMat block_diag(const CMat& a, const CMat& b) {
  CMat out = CMat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

CMat pad_identity(const CMat& a, int m) {
  if (a.rows() != a.cols() || a.rows() > m)
    throw Error(ErrorCode::Dimension, "pad_identity: cannot pad to a smaller size");
  CMat out = CMat::Identity(m, m);
  out.topLeftCorner(a.rows(), a.cols()) = a;
  return out;
}

CMat path_ordered_exp(const std::function<CMat(double)>& x, int steps) {
  if (steps < 2) throw Error(ErrorCode::Configuration, "path_ordered_exp: grid size must be >= 2");
  const CMat x0 = x(0.0);
  require_square(x0, "path_ordered_exp");
  const int n = static_cast<int>(x0.rows());
  const double h = 1.0 / steps;
  CMat hol = CMat::Identity(n, n);
  CMat xa = x0;
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const CMat xm = x(t + 0.5 * h);
    const CMat xb = x(t + h);
    const CMat k1 = hol * xa;
    const CMat k2 = (hol + 0.5 * h * k1) * xm;
    const CMat k3 = (hol + 0.5 * h * k2) * xm;
    const CMat k4 = (hol + h * k3) * xb;
    hol += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    xa = xb;
  }
  if (!all_finite(hol)) throw Error(ErrorCode::Domain, "path_ordered_exp: non-finite integrand");
  return hol;
}

Complex trace(const CMat& m) { return m.trace(); }

}  // namespace lchern
