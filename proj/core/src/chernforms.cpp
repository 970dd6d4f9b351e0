#include "lchern/chernforms.hpp"

#include <algorithm>
#include <cmath>

namespace lchern {

namespace {

struct NameEntry {
  FormName name;
  const char* kebab;
  const char* camel;
};

constexpr NameEntry kNames[] = {
    {FormName::ChOdd, "ch-odd", "ChOdd"},
    {FormName::CSOdd, "cs-odd", "CSOdd"},
    {FormName::CSConnection, "cs-connection", "CSConnection"},
    {FormName::TrHolEven, "tr-hol-even", "TrHolEven"},
    {FormName::BCSEven, "bcs-even", "BCSEven"},
    {FormName::BChOdd, "bch-odd", "BChOdd"},
    {FormName::BCSOdd, "bcs-odd", "BCSOdd"},
};

double lfact(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(lfact(n) - lfact(k) - lfact(n - k)));
}

// All k-subsets of {0..n-1} other than `skip`, in lexicographic order.
void subsets(int n, int k, int skip, std::vector<std::vector<int>>& out) {
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      if (i == skip) continue;
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

SlotSequence word(int n, Complex coeff, bool s_integrated) {
  SlotSequence seq;
  seq.coeff = coeff;
  seq.slots.assign(static_cast<std::size_t>(n), Slot(SlotKind::Contract));
  seq.s_integrated = s_integrated;
  return seq;
}

void require_degree(FormName name, int degree, int max_degree) {
  if (degree < 0) throw Error(ErrorCode::Arity, "negative form degree");
  if (degree % 2 != form_parity(name))
    throw Error(ErrorCode::Parity, to_string(name) + " has no component of degree " + std::to_string(degree));
  if (degree > max_degree)
    throw Error(ErrorCode::Configuration, "degree " + std::to_string(degree) + " exceeds the degree cap " +
                                              std::to_string(max_degree));
}

void require_n_max(int n_max, int lowest) {
  if (n_max < lowest)
    throw Error(ErrorCode::Configuration, "n_max " + std::to_string(n_max) + " is below the shortest word length " +
                                              std::to_string(lowest));
  if (n_max > 400) throw Error(ErrorCode::Configuration, "n_max above 400 is not supported");
}

// Σ_{n>N} a(n)·choices(n)·shuffle_count·c^{n−1−k}·q^{k+1}/n!, computed in logs.
template <class Choices>
double series_tail(int n_max, int k, double c, double q, double shuffle_count, Choices&& choices) {
  if (q <= 0.0) return 0.0;
  double total = 0.0;
  for (int n = n_max + 1; n <= n_max + 600; ++n) {
    const double ch = choices(n);
    if (ch <= 0.0) continue;
    const double lc = c > 0.0 ? (n - 1 - k) * std::log(c) : (n - 1 - k == 0 ? 0.0 : -INFINITY);
    const double term = std::exp(std::log(ch) + std::log(shuffle_count) + lc + (k + 1) * std::log(q) - lfact(n));
    total += term;
    if (n > n_max + 5 && term < 1e-30 * std::max(total, 1e-300)) break;
  }
  return total;
}

double shuffle_count(int degree, int two_forms) { return std::exp(lfact(degree) - two_forms * std::log(2.0)); }

void require_vectors(std::size_t have, int want, const char* who) {
  if (static_cast<int>(have) != want)
    throw Error(ErrorCode::Arity, std::string(who) + ": expected " + std::to_string(want) + " tangent vectors, got " +
                                      std::to_string(have));
}

FormValue finish(const EvalResult& r, int n_max, double tail) {
  FormValue v;
  v.value = r.value;
  v.scale = r.scale;
  v.std_error = r.std_error;
  v.n_max = n_max;
  v.tail_bound = tail;
  return v;
}

}  // namespace

std::string to_string(FormName name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.kebab;
  return "?";
}

FormName parse_form_name(const std::string& text) {
  for (const auto& e : kNames)
    if (text == e.kebab || text == e.camel) return e.name;
  throw Error(ErrorCode::Input, "unknown form '" + text + "'");
}

int form_parity(FormName name) {
  switch (name) {
    case FormName::ChOdd:
    case FormName::CSConnection:
    case FormName::BCSEven:
    case FormName::BChOdd: return 1;
    default: return 0;
  }
}

double bch_coefficient(int n, int k) {
  const double mag = std::exp(lfact(n - 1) + lfact(k) - lfact(n + k));
  return (k % 2 ? -1.0 : 1.0) * mag;
}

std::uint64_t bch_term_count(int k, int n_max) {
  std::uint64_t total = 0;
  for (int n = k + 1; n <= n_max; ++n) total += static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(binom(n - 1, k));
  return total;
}

FormSpec build_form_spec(FormName name, int degree, int n_max, int max_degree) {
  require_degree(name, degree, max_degree);
  FormSpec spec;
  spec.name = name;
  spec.degree = degree;
  spec.n_max = n_max;
  auto& terms = spec.terms;
  switch (name) {
    case FormName::ChOdd: {
      const int n = (degree - 1) / 2;
      SlotSequence seq = word(degree, (n % 2 ? -1.0 : 1.0) * std::exp(lfact(n) - lfact(degree)), false);
      std::fill(seq.slots.begin(), seq.slots.end(), Slot(SlotKind::OneForm));
      seq.time = TimeMode::Pointwise;
      terms.push_back(seq);
      break;
    }
    case FormName::CSOdd: {
      const int n = degree / 2;
      SlotSequence seq = word(degree + 1, (n % 2 ? -1.0 : 1.0) * std::exp(lfact(n) - lfact(degree)), true);
      seq.slots[0] = Slot(SlotKind::SDerivOneForm, 0);
      for (int i = 1; i <= degree; ++i) seq.slots[static_cast<std::size_t>(i)] = Slot(SlotKind::OneForm);
      seq.time = TimeMode::Pointwise;
      terms.push_back(seq);
      break;
    }
    case FormName::CSConnection: {
      const int n = (degree - 1) / 2;
      for (int i = 0; i <= n; ++i) {
        SlotSequence seq = word(n + 1, std::exp(-lfact(n + 1)), true);
        for (int j = 0; j <= n; ++j)
          seq.slots[static_cast<std::size_t>(j)] = j == i ? Slot(SlotKind::SDerivOneForm) : Slot(SlotKind::TwoForm);
        seq.time = TimeMode::Pointwise;
        terms.push_back(seq);
      }
      break;
    }
    case FormName::TrHolEven: {
      const int k = degree / 2;
      require_n_max(n_max, k);
      for (int m = k; m <= n_max; ++m) {
        std::vector<std::vector<int>> js;
        subsets(m, k, -1, js);
        for (const auto& j : js) {
          SlotSequence seq = word(m, 1.0, false);
          for (int p : j) seq.slots[static_cast<std::size_t>(p)] = Slot(SlotKind::TwoForm);
          terms.push_back(seq);
        }
      }
      break;
    }
    case FormName::BCSEven:
    case FormName::BChOdd: {
      const int k = (degree - 1) / 2;
      require_n_max(n_max, k + 1);
      const bool even = name == FormName::BCSEven;
      for (int n = k + 1; n <= n_max; ++n) {
        const double c = even ? 1.0 : bch_coefficient(n, k);
        for (int r = 0; r < n; ++r) {
          std::vector<std::vector<int>> js;
          subsets(n, k, r, js);
          for (const auto& j : js) {
            SlotSequence seq = word(n, c, even);
            seq.slots[static_cast<std::size_t>(r)] = even ? Slot(SlotKind::SDerivOneForm) : Slot(SlotKind::OneForm);
            for (int p : j) seq.slots[static_cast<std::size_t>(p)] = Slot(SlotKind::TwoForm);
            terms.push_back(seq);
          }
        }
      }
      break;
    }
    case FormName::BCSOdd: {
      const int k = degree / 2;
      require_n_max(n_max, k + 1);
      for (int n = k + 1; n <= n_max; ++n) {
        const double c = bch_coefficient(n, k);
        for (int r = 0; r < n; ++r) {
          std::vector<std::vector<int>> js;
          subsets(n, k, r, js);
          for (const auto& j : js) {
            SlotSequence seq = word(n, c, true);
            seq.slots[static_cast<std::size_t>(r)] = Slot(SlotKind::SDerivOneForm, 0);
            for (int p : j) seq.slots[static_cast<std::size_t>(p)] = Slot(SlotKind::TwoForm);
            terms.push_back(seq);
            for (int ji : j) {
              SlotSequence alt = word(n, r < ji ? c : -c, true);
              alt.slots[static_cast<std::size_t>(r)] = Slot(SlotKind::OneForm);
              for (int p : j) alt.slots[static_cast<std::size_t>(p)] = Slot(SlotKind::TwoForm);
              alt.slots[static_cast<std::size_t>(ji)] = Slot(SlotKind::SDerivTwoForm, 1);
              terms.push_back(alt);
            }
          }
        }
      }
      break;
    }
  }
  return spec;
}

int suggest_n_max(double contract_norm, int k, double target, int floor) {
  const double count = shuffle_count(2 * k + 1, k);
  for (int n = std::max(floor, k + 1); n <= 400; ++n) {
    const double tail = series_tail(n, k, contract_norm, 1.0, count, [k](int m) {
      return std::abs(bch_coefficient(m, k)) * m * binom(m - 1, k);
    });
    if (tail <= target) return n;
  }
  return 400;
}

// --- evaluations ------------------------------------------------------------

FormValue ch_odd(const CMat& g, std::span<const CMat> vectors, int max_degree) {
  const int degree = static_cast<int>(vectors.size());
  const FormSpec spec = build_form_spec(FormName::ChOdd, degree, kDefaultNMax, max_degree);
  Curve point(constant_family(g));
  std::vector<TangentField> fields;
  for (const CMat& v : vectors) {
    if (v.rows() != g.rows() || v.cols() != g.cols()) throw Error(ErrorCode::Dimension, "ch_odd: vector shape mismatch");
    fields.push_back(constant_field(point, v));
  }
  QuadratureSpec quad;
  quad.grid_t = 8;
  MaurerCartanBinding binding(point, fields);
  return finish(evaluate_terms(spec.terms, binding, quad), 0, 0.0);
}

FormValue cs_odd(const Curve& path, std::span<const TangentField> vectors, const QuadratureSpec& quad, int max_degree) {
  const int degree = static_cast<int>(vectors.size());
  FormSpec spec = build_form_spec(FormName::CSOdd, degree, kDefaultNMax, max_degree);
  // Path parameter is the curve time: ω(∂_s) becomes the contraction.
  for (auto& term : spec.terms) {
    term.s_integrated = false;
    term.slots[0] = Slot(SlotKind::Contract);
  }
  MaurerCartanBinding binding(path, {vectors.begin(), vectors.end()});
  return finish(evaluate_terms(spec.terms, binding, quad), 0, 0.0);
}

FormValue cs_odd(const CylinderMap& cylinder, std::span<const CylinderField> vectors, const QuadratureSpec& quad,
                 int max_degree) {
  const int degree = static_cast<int>(vectors.size());
  const FormSpec spec = build_form_spec(FormName::CSOdd, degree, kDefaultNMax, max_degree);
  CylinderBinding binding(cylinder, {vectors.begin(), vectors.end()});
  return finish(evaluate_terms(spec.terms, binding, quad), 0, 0.0);
}

FormValue cs_connection(const Curve& base, const ConnectionPath& path, std::span<const TangentField> vectors,
                        const QuadratureSpec& quad, int max_degree) {
  const int degree = static_cast<int>(vectors.size());
  const FormSpec spec = build_form_spec(FormName::CSConnection, degree, kDefaultNMax, max_degree);
  ConnectionPathBinding binding(base, path, {vectors.begin(), vectors.end()});
  return finish(evaluate_terms(spec.terms, binding, quad), 0, 0.0);
}

WindingResult winding_number(const Curve& loop, const QuadratureSpec& quad) {
  const FormValue cs = cs_odd(loop, {}, quad);
  WindingResult w;
  w.raw = cs.value;
  const Complex normalized = cs.value / (2.0 * kPi * kI);
  w.rounded = std::llround(normalized.real());
  w.residual = std::abs(normalized - Complex(static_cast<double>(w.rounded), 0.0));
  w.integral = w.residual <= 0.01;
  return w;
}

FormValue tr_hol_even(const Curve& base, const ConnectionData& connection, int k, std::span<const TangentField> vectors,
                      int n_max, const QuadratureSpec& quad, int max_degree) {
  require_vectors(vectors.size(), 2 * k, "tr_hol_even");
  const FormSpec spec = build_form_spec(FormName::TrHolEven, 2 * k, n_max, max_degree);
  ConnectionBinding binding(base, connection, {vectors.begin(), vectors.end()});
  const EvalResult r = evaluate_terms(spec.terms, binding, quad);
  const double q = k == 0 ? 1.0 : r.payload_sup;
  const double c = r.contract_sup;
  // Word of length m with k curvature slots: C(m,k)·c^{m−k}·q^k/m!.
  double tail = 0.0;
  for (int m = n_max + 1; m <= n_max + 600; ++m) {
    const double lc = c > 0.0 ? (m - k) * std::log(c) : (m == k ? 0.0 : -INFINITY);
    const double lq = k > 0 ? k * std::log(std::max(q, 1e-300)) : 0.0;
    const double term = binom(m, k) * std::exp(lc + lq - lfact(m) + std::log(shuffle_count(2 * k, k)));
    tail += term;
    if (m > n_max + 5 && term < 1e-30 * std::max(tail, 1e-300)) break;
  }
  tail *= std::sqrt(static_cast<double>(binding.dim()));
  return finish(r, n_max, tail);
}

FormValue bcs_even(const Curve& base, const ConnectionPath& path, int k, std::span<const TangentField> vectors,
                   int n_max, const QuadratureSpec& quad, int max_degree) {
  require_vectors(vectors.size(), 2 * k + 1, "bcs_even");
  const FormSpec spec = build_form_spec(FormName::BCSEven, 2 * k + 1, n_max, max_degree);
  ConnectionPathBinding binding(base, path, {vectors.begin(), vectors.end()});
  const EvalResult r = evaluate_terms(spec.terms, binding, quad);
  const double tail = std::sqrt(static_cast<double>(binding.dim())) *
                      series_tail(n_max, k, r.contract_sup, r.payload_sup, shuffle_count(2 * k + 1, k),
                                  [k](int n) { return n * binom(n - 1, k); });
  return finish(r, n_max, tail);
}

FormValue bch_odd(const UnitaryLoop& loop, int k, std::span<const TangentField> vectors, int n_max,
                  const QuadratureSpec& quad, int max_degree) {
  require_vectors(vectors.size(), 2 * k + 1, "bch_odd");
  const FormSpec spec = build_form_spec(FormName::BChOdd, 2 * k + 1, n_max, max_degree);
  MaurerCartanBinding binding(loop, {vectors.begin(), vectors.end()});
  const EvalResult r = evaluate_terms(spec.terms, binding, quad);
  const double tail = std::sqrt(static_cast<double>(binding.dim())) *
                      series_tail(n_max, k, r.contract_sup, r.payload_sup, shuffle_count(2 * k + 1, k), [k](int n) {
                        return std::abs(bch_coefficient(n, k)) * n * binom(n - 1, k);
                      });
  return finish(r, n_max, tail);
}

FormValue bcs_odd(const CylinderMap& cylinder, int k, std::span<const CylinderField> vectors, int n_max,
                  const QuadratureSpec& quad, int max_degree) {
  require_vectors(vectors.size(), 2 * k, "bcs_odd");
  const FormSpec spec = build_form_spec(FormName::BCSOdd, 2 * k, n_max, max_degree);
  CylinderBinding binding(cylinder, {vectors.begin(), vectors.end()});
  const EvalResult r = evaluate_terms(spec.terms, binding, quad);
  const double tail = std::sqrt(static_cast<double>(binding.dim())) * (k + 1) *
                      series_tail(n_max, k, r.contract_sup, r.payload_sup, shuffle_count(std::max(2 * k, 1), k),
                                  [k](int n) { return std::abs(bch_coefficient(n, k)) * n * binom(n - 1, k); });
  return finish(r, n_max, tail);
}

}  // namespace lchern
