#include "lchern/formeval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <optional>

#include "lchern/parallel.hpp"

namespace lchern {

std::string to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::Contract: return "Contract";
    case SlotKind::OneForm: return "OneForm";
    case SlotKind::TwoForm: return "TwoForm";
    case SlotKind::SDerivOneForm: return "SDerivOneForm";
    case SlotKind::SDerivTwoForm: return "SDerivTwoForm";
  }
  return "?";
}

SlotKind parse_slot_kind(const std::string& name) {
  for (SlotKind k : {SlotKind::Contract, SlotKind::OneForm, SlotKind::TwoForm, SlotKind::SDerivOneForm,
                     SlotKind::SDerivTwoForm})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::Input, "unknown slot kind '" + name + "'");
}

int default_degree(SlotKind kind) {
  switch (kind) {
    case SlotKind::Contract: return 0;
    case SlotKind::OneForm:
    case SlotKind::SDerivOneForm: return 1;
    case SlotKind::TwoForm:
    case SlotKind::SDerivTwoForm: return 2;
  }
  return 0;
}

int SlotSequence::total_degree() const {
  int d = 0;
  for (const Slot& s : slots) d += s.degree;
  return d;
}

// --- shuffles ---------------------------------------------------------------

namespace {

void shuffle_rec(std::span<const int> degrees, std::size_t slot, std::uint32_t used, int d,
                 std::vector<std::uint32_t>& masks, std::vector<Shuffle>& out) {
  if (slot == degrees.size()) {
    std::vector<int> order;
    for (std::uint32_t m : masks)
      for (int i = 0; i < d; ++i)
        if (m >> i & 1u) order.push_back(i);
    int inversions = 0;
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a + 1; b < order.size(); ++b)
        if (order[a] > order[b]) ++inversions;
    out.push_back(Shuffle{inversions % 2 ? -1 : 1, masks});
    return;
  }
  const int need = degrees[slot];
  if (need == 0) {
    masks[slot] = 0;
    shuffle_rec(degrees, slot + 1, used, d, masks, out);
    return;
  }
  // Enumerate need-subsets of the unused vectors in increasing mask order.
  const std::uint32_t full = (d >= 32) ? ~0u : ((1u << d) - 1u);
  const std::uint32_t free = full & ~used;
  for (std::uint32_t sub = free; sub; sub = (sub - 1) & free) {
    if (std::popcount(sub) != need) continue;
    masks[slot] = sub;
    shuffle_rec(degrees, slot + 1, used | sub, d, masks, out);
  }
}

}  // namespace

std::vector<Shuffle> shuffles(std::span<const int> degrees) {
  int d = 0;
  for (int k : degrees) {
    if (k < 0) throw Error(ErrorCode::Arity, "shuffles: negative slot degree");
    d += k;
  }
  if (d > 30) throw Error(ErrorCode::Arity, "shuffles: total degree too large");
  std::vector<std::uint32_t> masks(degrees.size(), 0);
  std::vector<Shuffle> out;
  shuffle_rec(degrees, 0, 0, d, masks, out);
  std::sort(out.begin(), out.end(), [](const Shuffle& a, const Shuffle& b) { return a.masks < b.masks; });
  return out;
}

// --- engine -----------------------------------------------------------------

namespace {

using Word = std::vector<int>;  // indices into the key table

struct Group {
  TimeMode time;
  bool s_integrated;
  std::map<Word, Complex> words;
};

// Flat per-key tables: table[k][i*nn + entry], column-major entries.
struct Tables {
  int n = 0;
  int nodes = 0;
  std::vector<std::vector<Complex>> data;
  double contract_sup = 0.0;
  double payload_sup = 0.0;
};

Tables tabulate(const SlotBinding& binding, std::span<const FactorKey> keys, double s, int intervals) {
  Tables tb;
  tb.n = static_cast<int>(binding.dim());
  tb.nodes = intervals + 1;
  const std::size_t nn = static_cast<std::size_t>(tb.n) * tb.n;
  tb.data.assign(keys.size(), std::vector<Complex>(nn * tb.nodes));
  std::vector<double> sup(static_cast<std::size_t>(tb.nodes), 0.0), psup(sup);
  parallel_for(static_cast<std::size_t>(tb.nodes), [&](std::size_t i) {
    std::vector<CMat> out(keys.size());
    binding.factors(s, static_cast<double>(i) / intervals, keys, out);
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (out[k].rows() != tb.n || out[k].cols() != tb.n)
        throw Error(ErrorCode::Dimension, "binding returned a factor of the wrong size");
      if (!all_finite(out[k])) throw Error(ErrorCode::Domain, "binding returned a non-finite factor");
      std::copy(out[k].data(), out[k].data() + nn, tb.data[k].begin() + static_cast<std::ptrdiff_t>(i * nn));
      double& target = keys[k].kind == SlotKind::Contract ? sup[i] : psup[i];
      target = std::max(target, out[k].norm());
    }
  });
  tb.contract_sup = *std::max_element(sup.begin(), sup.end());
  tb.payload_sup = *std::max_element(psup.begin(), psup.end());
  return tb;
}

inline void matmul(const Complex* a, const Complex* b, Complex* c, int n) {
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Complex acc = 0.0;
      for (int k = 0; k < n; ++k) acc += a[i + n * k] * b[k + n * j];
      c[i + n * j] = acc;
    }
}

Complex trace_of(const Complex* a, int n) {
  Complex acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i + n * i];
  return acc;
}

// One level of the recursion: out(t_i) = ∫₀^{t_i} prev·f, prev = nullptr meaning I.
void cumulative_level(const Complex* prev, const std::vector<Complex>& f, std::vector<Complex>& prod,
                      std::vector<Complex>& out, int n, int nodes, QuadratureRule rule) {
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const Complex* g = f.data();
  if (prev) {
    for (int i = 0; i < nodes; ++i) matmul(prev + i * nn, f.data() + i * nn, prod.data() + i * nn, n);
    g = prod.data();
  }
  const double h = 1.0 / (nodes - 1);
  Complex* o = out.data();
  std::fill(o, o + nn, Complex(0.0));
  if (rule == QuadratureRule::Trapezoid) {
    for (int i = 1; i < nodes; ++i)
      for (std::size_t e = 0; e < nn; ++e)
        o[i * nn + e] = o[(i - 1) * nn + e] + 0.5 * h * (g[(i - 1) * nn + e] + g[i * nn + e]);
    return;
  }
  for (int i = 0; i + 2 < nodes; i += 2)
    for (std::size_t e = 0; e < nn; ++e) {
      const Complex f0 = g[i * nn + e], f1 = g[(i + 1) * nn + e], f2 = g[(i + 2) * nn + e];
      o[(i + 1) * nn + e] = o[i * nn + e] + h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
      o[(i + 2) * nn + e] = o[i * nn + e] + h / 3.0 * (f0 + 4.0 * f1 + f2);
    }
}

constexpr std::size_t kChunk = 256;

// Backward levels S_c(t) = ∫_{t<u₁<…<u_c<1} X(u₁)···X(u_c) for the
// contraction factor X, c = 0..depth (S_0 = I is stored explicitly).
std::vector<std::vector<Complex>> suffix_levels(const std::vector<Complex>& x, int n, int nodes, int depth,
                                                QuadratureRule rule) {
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<std::vector<Complex>> out(static_cast<std::size_t>(depth) + 1, std::vector<Complex>(nn * nodes));
  for (int i = 0; i < nodes; ++i)
    for (int a = 0; a < n; ++a) out[0][i * nn + a + n * a] = 1.0;
  if (depth == 0) return out;
  // Work on the reversed grid so the forward cumulative rule applies.
  std::vector<Complex> rev_x(nn * nodes), rev_prev(nn * nodes), prod(nn * nodes), rev_out(nn * nodes);
  for (int i = 0; i < nodes; ++i)
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(i * nn), x.begin() + static_cast<std::ptrdiff_t>((i + 1) * nn),
              rev_x.begin() + static_cast<std::ptrdiff_t>((nodes - 1 - i) * nn));
  for (int c = 1; c <= depth; ++c) {
    const auto& prev = out[static_cast<std::size_t>(c - 1)];
    for (int i = 0; i < nodes; ++i)
      std::copy(prev.begin() + static_cast<std::ptrdiff_t>(i * nn), prev.begin() + static_cast<std::ptrdiff_t>((i + 1) * nn),
                rev_prev.begin() + static_cast<std::ptrdiff_t>((nodes - 1 - i) * nn));
    // Reversed: G(v) = X(1−v)·S_{c−1}(1−v); integrate in v.
    for (int i = 0; i < nodes; ++i) matmul(rev_x.data() + i * nn, rev_prev.data() + i * nn, prod.data() + i * nn, n);
    cumulative_level(nullptr, prod, rev_prev, rev_out, n, nodes, rule);
    auto& dst = out[static_cast<std::size_t>(c)];
    for (int i = 0; i < nodes; ++i)
      std::copy(rev_out.begin() + static_cast<std::ptrdiff_t>(i * nn), rev_out.begin() + static_cast<std::ptrdiff_t>((i + 1) * nn),
                dst.begin() + static_cast<std::ptrdiff_t>((nodes - 1 - i) * nn));
  }
  return out;
}

struct SimplexItem {
  Word head;
  int tail;
  std::size_t index;
};

// Words split into head·X^c and sorted so that shared head prefixes are
// adjacent. Independent of the s node.
struct SimplexPlan {
  std::vector<SimplexItem> items;
  int max_tail = 0;
};

SimplexPlan plan_simplex(const std::vector<const Word*>& words, int contract_key) {
  SimplexPlan plan;
  plan.items.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const Word& word = *words[i];
    std::size_t cut = word.size();
    if (contract_key >= 0)
      while (cut > 0 && word[cut - 1] == contract_key) --cut;
    SimplexItem it{Word(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(cut)),
                   static_cast<int>(word.size() - cut), i};
    plan.max_tail = std::max(plan.max_tail, it.tail);
    plan.items.push_back(std::move(it));
  }
  std::sort(plan.items.begin(), plan.items.end(), [](const SimplexItem& a, const SimplexItem& b) {
    return a.head != b.head ? a.head < b.head : a.tail < b.tail;
  });
  return plan;
}

// Deterministic simplex evaluation; vals[w] receives each word's traced
// integral (without coefficient). A word is split as head·X^c with X the
// contraction factor: shared head prefixes are integrated forward, the X^c
// tail comes from the backward levels, and the last head factor is the
// meeting point, Σ_i w_i Tr(C(t_i)·F(t_i)·S_c(t_i)).
void simplex_values(const SimplexPlan& plan, const Tables& tb, int contract_key, const std::vector<double>& w,
                    QuadratureRule rule, std::vector<Complex>& vals) {
  const int n = tb.n;
  const int nodes = tb.nodes;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const auto& items = plan.items;
  const int max_tail = plan.max_tail;
  const std::vector<std::vector<Complex>> suffix =
      contract_key >= 0 ? suffix_levels(tb.data[static_cast<std::size_t>(contract_key)], n, nodes, max_tail, rule)
                        : suffix_levels({}, n, nodes, 0, rule);

  const std::size_t chunks = (items.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(items.size(), lo + kChunk);
    std::vector<std::vector<Complex>> levels;
    std::vector<Complex> prod(nn * nodes), head_product(nn * nodes), weighted(nn * nodes);
    Word cur;
    const Word* cached = nullptr;
    for (std::size_t k = lo; k < hi; ++k) {
      const SimplexItem& it = items[k];
      if (it.head.empty()) {
        // Pure X^c word: S_c(0) is the full integral.
        if (contract_key < 0 || it.tail == 0) {
          vals[it.index] = static_cast<double>(n);
        } else {
          vals[it.index] = trace_of(suffix[static_cast<std::size_t>(it.tail)].data(), n);
        }
        continue;
      }
      if (!cached || *cached != it.head) {
        const std::size_t depth = it.head.size() - 1;
        std::size_t common = 0;
        while (common < cur.size() && common < depth && cur[common] == it.head[common]) ++common;
        cur.resize(common);
        if (levels.size() < depth) levels.resize(depth, std::vector<Complex>(nn * nodes));
        for (std::size_t j = common; j < depth; ++j) {
          const Complex* prev = j == 0 ? nullptr : levels[j - 1].data();
          cumulative_level(prev, tb.data[static_cast<std::size_t>(it.head[j])], prod, levels[j], n, nodes, rule);
          cur.push_back(it.head[j]);
        }
        const std::vector<Complex>& last = tb.data[static_cast<std::size_t>(it.head.back())];
        if (depth == 0) {
          std::copy(last.begin(), last.end(), head_product.begin());
        } else {
          const Complex* prev = levels[depth - 1].data();
          for (int i = 0; i < nodes; ++i) matmul(prev + i * nn, last.data() + i * nn, head_product.data() + i * nn, n);
        }
        // Weighted transpose, so each word is one flat dot product with S_c.
        for (int i = 0; i < nodes; ++i)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              weighted[i * nn + b + n * a] = w[i] * head_product[i * nn + a + n * b];
        cached = &it.head;
      }
      const auto& tail = suffix[static_cast<std::size_t>(it.tail)];
      vals[it.index] = Eigen::Map<const Eigen::VectorXcd>(weighted.data(), static_cast<Eigen::Index>(weighted.size()))
                           .cwiseProduct(Eigen::Map<const Eigen::VectorXcd>(tail.data(), static_cast<Eigen::Index>(tail.size())))
                           .sum();
    }
  });
}

void pointwise_values(const std::vector<const Word*>& words, const Tables& tb, const std::vector<double>& w,
                      std::vector<Complex>& vals) {
  const int n = tb.n;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  parallel_for(words.size(), [&](std::size_t wi) {
    const Word& word = *words[wi];
    if (word.empty()) {
      vals[wi] = static_cast<double>(n);
      return;
    }
    std::vector<Complex> acc(nn), tmp(nn);
    Complex total = 0.0;
    for (int i = 0; i < tb.nodes; ++i) {
      const Complex* first = tb.data[static_cast<std::size_t>(word[0])].data() + i * nn;
      std::copy(first, first + nn, acc.begin());
      for (std::size_t j = 1; j < word.size(); ++j) {
        matmul(acc.data(), tb.data[static_cast<std::size_t>(word[j])].data() + i * nn, tmp.data(), n);
        std::swap(acc, tmp);
      }
      total += w[i] * trace_of(acc.data(), n);
    }
    vals[wi] = total;
  });
}

struct McResult {
  Complex value = 0.0;
  double variance = 0.0;
  double abs_mean = 0.0;
};

// Monte-Carlo over sorted uniform tuples; all words of one length share the
// samples, drawn from (seed, stream = 1000·node + length, index).
McResult simplex_monte_carlo(const std::vector<const Word*>& words, const std::vector<Complex>& coeffs,
                             const SlotBinding& binding, std::span<const FactorKey> keys, double s,
                             std::size_t s_node, const QuadratureSpec& quad) {
  McResult res;
  const int n = static_cast<int>(binding.dim());
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < words.size(); ++i) by_length[words[i]->size()].push_back(i);
  const auto samples = static_cast<std::size_t>(quad.mc_samples);
  for (const auto& [len, members] : by_length) {
    if (len == 0) {
      for (std::size_t i : members) {
        res.value += coeffs[i] * static_cast<double>(n);
        res.abs_mean += std::abs(coeffs[i]) * n;
      }
      continue;
    }
    // Keys needed at each position.
    std::vector<int> used;
    for (std::size_t i : members) used.insert(used.end(), words[i]->begin(), words[i]->end());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::vector<FactorKey> sub;
    std::vector<int> slot_of(keys.size(), -1);
    for (int k : used) {
      slot_of[static_cast<std::size_t>(k)] = static_cast<int>(sub.size());
      sub.push_back(keys[static_cast<std::size_t>(k)]);
    }
    const double vol = 1.0 / std::tgamma(static_cast<double>(len) + 1.0);
    std::vector<Complex> f(samples);
    std::vector<double> fabs(samples);
    const std::uint64_t stream = 1000u * s_node + len;
    parallel_for(samples, [&](std::size_t si) {
      std::vector<double> t(len);
      for (std::size_t j = 0; j < len; ++j) t[j] = uniform01(quad.seed, stream, si * len + j);
      std::sort(t.begin(), t.end());
      std::vector<std::vector<CMat>> at(len, std::vector<CMat>(sub.size()));
      for (std::size_t j = 0; j < len; ++j) binding.factors(s, t[j], sub, at[j]);
      Complex total = 0.0;
      double total_abs = 0.0;
      for (std::size_t i : members) {
        const Word& word = *words[i];
        CMat acc = at[0][static_cast<std::size_t>(slot_of[static_cast<std::size_t>(word[0])])];
        for (std::size_t j = 1; j < len; ++j)
          acc = acc * at[j][static_cast<std::size_t>(slot_of[static_cast<std::size_t>(word[j])])];
        const Complex c = coeffs[i] * acc.trace() * vol;
        total += c;
        total_abs += std::abs(c);
      }
      f[si] = total;
      fabs[si] = total_abs;
    });
    Complex mean = 0.0;
    double abs_mean = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      mean += f[i];
      abs_mean += fabs[i];
    }
    mean /= static_cast<double>(samples);
    abs_mean /= static_cast<double>(samples);
    double var = 0.0;
    for (std::size_t i = 0; i < samples; ++i) var += std::norm(f[i] - mean);
    var /= static_cast<double>(samples > 1 ? samples - 1 : 1);
    res.value += mean;
    res.variance += var / static_cast<double>(samples);
    res.abs_mean += abs_mean;
  }
  return res;
}

}  // namespace

EvalResult evaluate_terms(std::span<const SlotSequence> terms, const SlotBinding& binding, const QuadratureSpec& quad) {
  quad.validate();
  const int arity = binding.arity();
  if (arity > 16) throw Error(ErrorCode::Arity, "evaluate_terms: too many tangent vectors");

  // Compile terms × shuffles into words over a shared key table.
  std::map<std::vector<int>, std::vector<Shuffle>> shuffle_cache;
  std::map<FactorKey, int> key_index;
  std::vector<FactorKey> keys;
  std::map<std::pair<int, bool>, Group> groups;
  for (const SlotSequence& term : terms) {
    if (term.total_degree() != arity)
      throw Error(ErrorCode::Arity, "slot sequence of degree " + std::to_string(term.total_degree()) + " evaluated on " +
                                        std::to_string(arity) + " vectors");
    std::vector<int> degrees;
    for (const Slot& s : term.slots) degrees.push_back(s.degree);
    auto it = shuffle_cache.find(degrees);
    if (it == shuffle_cache.end()) it = shuffle_cache.emplace(degrees, shuffles(degrees)).first;
    const auto gk = std::make_pair(static_cast<int>(term.time), term.s_integrated);
    Group& g = groups.try_emplace(gk, Group{term.time, term.s_integrated, {}}).first->second;
    for (const Shuffle& sh : it->second) {
      Word word;
      word.reserve(term.slots.size());
      for (std::size_t j = 0; j < term.slots.size(); ++j) {
        const FactorKey key{term.slots[j].kind, sh.masks[j]};
        auto [kit, inserted] = key_index.try_emplace(key, static_cast<int>(keys.size()));
        if (inserted) keys.push_back(key);
        word.push_back(kit->second);
      }
      g.words[word] += term.coeff * static_cast<double>(sh.sign);
    }
  }

  int contract_key = -1;
  if (auto it = key_index.find(FactorKey{SlotKind::Contract, 0}); it != key_index.end()) contract_key = it->second;

  EvalResult result;
  double variance = 0.0;
  const std::vector<double> wt = rule_weights(quad.grid_t, quad.rule);
  for (const auto& [gk, group] : groups) {
    std::vector<const Word*> words;
    std::vector<Complex> coeffs;
    for (const auto& [word, c] : group.words) {
      if (c == Complex(0.0)) continue;
      words.push_back(&word);
      coeffs.push_back(c);
    }
    if (words.empty()) continue;

    std::vector<double> s_nodes{0.0}, s_weights{1.0};
    if (group.s_integrated && binding.s_dependent()) {
      s_weights = rule_weights(quad.grid_s, quad.rule);
      s_nodes.resize(s_weights.size());
      for (std::size_t i = 0; i < s_nodes.size(); ++i) s_nodes[i] = static_cast<double>(i) / quad.grid_s;
    }
    std::vector<Complex> vals(words.size());
    SimplexPlan plan;
    if (group.time == TimeMode::Simplex && quad.mc_samples == 0) plan = plan_simplex(words, contract_key);
    for (std::size_t si = 0; si < s_nodes.size(); ++si) {
      const double s = s_nodes[si];
      if (group.time == TimeMode::Simplex && quad.mc_samples > 0) {
        const McResult mc = simplex_monte_carlo(words, coeffs, binding, keys, s, si, quad);
        result.value += s_weights[si] * mc.value;
        result.scale += std::abs(s_weights[si]) * mc.abs_mean;
        variance += s_weights[si] * s_weights[si] * mc.variance;
        continue;
      }
      const Tables tb = tabulate(binding, keys, s, quad.grid_t);
      result.contract_sup = std::max(result.contract_sup, tb.contract_sup);
      result.payload_sup = std::max(result.payload_sup, tb.payload_sup);
      if (group.time == TimeMode::Simplex)
        simplex_values(plan, tb, contract_key, wt, quad.rule, vals);
      else
        pointwise_values(words, tb, wt, vals);
      for (std::size_t i = 0; i < words.size(); ++i) {
        const Complex c = s_weights[si] * coeffs[i] * vals[i];
        result.value += c;
        result.scale += std::abs(c);
      }
    }
  }
  result.std_error = std::sqrt(variance);
  return result;
}

CMat iterated_integral(std::span<const std::function<CMat(double)>> fns, const QuadratureSpec& quad, int dim) {
  quad.validate();
  if (fns.empty()) return identity(dim);
  const int nodes = quad.grid_t + 1;
  const CMat probe = fns[0](0.0);
  if (probe.rows() != probe.cols()) throw Error(ErrorCode::Dimension, "iterated_integral: factors must be square");
  const int n = static_cast<int>(probe.rows());
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<std::vector<Complex>> tables(fns.size(), std::vector<Complex>(nn * nodes));
  parallel_for(fns.size() * static_cast<std::size_t>(nodes), [&](std::size_t idx) {
    const std::size_t j = idx / nodes, i = idx % nodes;
    const CMat v = fns[j](static_cast<double>(i) / quad.grid_t);
    if (v.rows() != n || v.cols() != n) throw Error(ErrorCode::Dimension, "iterated_integral: factor size mismatch");
    std::copy(v.data(), v.data() + nn, tables[j].begin() + static_cast<std::ptrdiff_t>(i * nn));
  });
  std::vector<Complex> prod(nn * nodes), a(nn * nodes), b(nn * nodes);
  const Complex* prev = nullptr;
  for (std::size_t j = 0; j < fns.size(); ++j) {
    cumulative_level(prev, tables[j], prod, a, n, nodes, quad.rule);
    std::swap(a, b);
    prev = b.data();
  }
  CMat out(n, n);
  std::copy(b.begin() + static_cast<std::ptrdiff_t>((nodes - 1) * nn), b.begin() + static_cast<std::ptrdiff_t>(nodes * nn),
            out.data());
  return out;
}

// --- bindings ---------------------------------------------------------------

namespace {

void require_degree(const FactorKey& key, int expected) {
  if (std::popcount(key.mask) != expected)
    throw Error(ErrorCode::Arity, to_string(key.kind) + " slot received " + std::to_string(std::popcount(key.mask)) +
                                      " vectors, expected " + std::to_string(expected));
}

std::pair<int, int> two_bits(std::uint32_t mask) {
  const int a = std::countr_zero(mask);
  const int b = std::countr_zero(mask & (mask - 1));
  return {a, b};
}

int one_bit(std::uint32_t mask) { return std::countr_zero(mask); }

CMat commutator(const CMat& a, const CMat& b) { return a * b - b * a; }

template <class Field>
void check_bases(const std::vector<Field>& fields, const auto& base, const char* who) {
  for (const auto& f : fields)
    if (!f.base().same_base(base)) throw Error(ErrorCode::WrongBase, std::string(who) + ": field over a different base");
}

}  // namespace

MaurerCartanBinding::MaurerCartanBinding(Curve base, std::vector<TangentField> vectors)
    : base_(std::move(base)), vectors_(std::move(vectors)) {
  check_bases(vectors_, base_, "MaurerCartanBinding");
}

void MaurerCartanBinding::factors(double, double t, std::span<const FactorKey> keys, std::span<CMat> out) const {
  const int vars[1] = {kVarT};
  const Jet j = base_.jet(t, vars);
  const auto lu = j.value.partialPivLu();
  std::vector<std::optional<CMat>> w(vectors_.size());
  auto omega = [&](int i) -> const CMat& {
    auto& slot = w[static_cast<std::size_t>(i)];
    if (!slot) slot = lu.solve(vectors_[static_cast<std::size_t>(i)](t));
    return *slot;
  };
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const FactorKey& key = keys[k];
    switch (key.kind) {
      case SlotKind::Contract:
        require_degree(key, 0);
        out[k] = lu.solve(j.d[0]);
        break;
      case SlotKind::OneForm:
        require_degree(key, 1);
        out[k] = omega(one_bit(key.mask));
        break;
      case SlotKind::TwoForm: {
        require_degree(key, 2);
        const auto [a, b] = two_bits(key.mask);
        out[k] = commutator(omega(a), omega(b));
        break;
      }
      default:
        throw Error(ErrorCode::Configuration, "Maurer-Cartan binding has no path direction for " + to_string(key.kind));
    }
  }
}

ConnectionBinding::ConnectionBinding(Curve base, ConnectionData connection, std::vector<TangentField> vectors)
    : base_(std::move(base)), connection_(std::move(connection)), vectors_(std::move(vectors)) {
  check_bases(vectors_, base_, "ConnectionBinding");
}

void ConnectionBinding::factors(double, double t, std::span<const FactorKey> keys, std::span<CMat> out) const {
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const FactorKey& key = keys[k];
    switch (key.kind) {
      case SlotKind::Contract:
        require_degree(key, 0);
        out[k] = connection_.one_form(t, base_.velocity(t));
        break;
      case SlotKind::OneForm:
        require_degree(key, 1);
        out[k] = connection_.one_form(t, vectors_[static_cast<std::size_t>(one_bit(key.mask))](t));
        break;
      case SlotKind::TwoForm: {
        require_degree(key, 2);
        const auto [a, b] = two_bits(key.mask);
        out[k] = connection_.curvature(t, vectors_[static_cast<std::size_t>(a)](t), vectors_[static_cast<std::size_t>(b)](t));
        break;
      }
      default:
        throw Error(ErrorCode::Configuration, "connection binding has no path direction for " + to_string(key.kind));
    }
  }
}

ConnectionPathBinding::ConnectionPathBinding(Curve base, ConnectionPath path, std::vector<TangentField> vectors)
    : base_(std::move(base)), path_(std::move(path)), vectors_(std::move(vectors)) {
  check_bases(vectors_, base_, "ConnectionPathBinding");
}

void ConnectionPathBinding::factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const {
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const FactorKey& key = keys[k];
    auto vec = [&](int i) { return vectors_[static_cast<std::size_t>(i)](t); };
    switch (key.kind) {
      case SlotKind::Contract:
        require_degree(key, 0);
        out[k] = path_.one_form(s, t, base_.velocity(t));
        break;
      case SlotKind::OneForm:
        require_degree(key, 1);
        out[k] = path_.one_form(s, t, vec(one_bit(key.mask)));
        break;
      case SlotKind::TwoForm: {
        require_degree(key, 2);
        const auto [a, b] = two_bits(key.mask);
        out[k] = path_.curvature(s, t, vec(a), vec(b));
        break;
      }
      case SlotKind::SDerivOneForm:
        if (std::popcount(key.mask) == 0)
          out[k] = path_.s_deriv_one_form(s, t, base_.velocity(t));
        else {
          require_degree(key, 1);
          out[k] = path_.s_deriv_one_form(s, t, vec(one_bit(key.mask)));
        }
        break;
      default:
        throw Error(ErrorCode::Configuration, "connection path binding does not provide " + to_string(key.kind));
    }
  }
}

CylinderBinding::CylinderBinding(CylinderMap cylinder, std::vector<CylinderField> vectors)
    : cylinder_(std::move(cylinder)), vectors_(std::move(vectors)) {
  check_bases(vectors_, cylinder_, "CylinderBinding");
}

void CylinderBinding::factors(double s, double t, std::span<const FactorKey> keys, std::span<CMat> out) const {
  const int vars[2] = {kVarT, kVarS};
  const Jet j = cylinder_.jet(s, t, vars);
  const auto lu = j.value.partialPivLu();
  std::vector<std::optional<CMat>> w(vectors_.size());
  std::optional<CMat> ws;
  auto omega = [&](int i) -> const CMat& {
    auto& slot = w[static_cast<std::size_t>(i)];
    if (!slot) slot = lu.solve(vectors_[static_cast<std::size_t>(i)](s, t));
    return *slot;
  };
  auto omega_s = [&]() -> const CMat& {
    if (!ws) ws = lu.solve(j.d[1]);
    return *ws;
  };
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const FactorKey& key = keys[k];
    switch (key.kind) {
      case SlotKind::Contract:
        require_degree(key, 0);
        out[k] = lu.solve(j.d[0]);
        break;
      case SlotKind::OneForm:
        require_degree(key, 1);
        out[k] = omega(one_bit(key.mask));
        break;
      case SlotKind::TwoForm: {
        require_degree(key, 2);
        const auto [a, b] = two_bits(key.mask);
        out[k] = commutator(omega(a), omega(b));
        break;
      }
      case SlotKind::SDerivOneForm:
        require_degree(key, 0);
        out[k] = omega_s();
        break;
      case SlotKind::SDerivTwoForm:
        require_degree(key, 1);
        out[k] = commutator(omega(one_bit(key.mask)), omega_s());
        break;
    }
  }
}

// --- conveniences -----------------------------------------------------------

Complex eval_slot_sequence(const Curve& base, const SlotSequence& seq, std::span<const TangentField> vectors,
                           const QuadratureSpec& quad) {
  MaurerCartanBinding b(base, {vectors.begin(), vectors.end()});
  return evaluate_terms(std::span(&seq, 1), b, quad).value;
}

Complex eval_slot_sequence(const Curve& base, const ConnectionPath& path, const SlotSequence& seq,
                           std::span<const TangentField> vectors, const QuadratureSpec& quad) {
  ConnectionPathBinding b(base, path, {vectors.begin(), vectors.end()});
  return evaluate_terms(std::span(&seq, 1), b, quad).value;
}

Complex eval_slot_sequence(const CylinderMap& cylinder, const SlotSequence& seq,
                           std::span<const CylinderField> vectors, const QuadratureSpec& quad) {
  CylinderBinding b(cylinder, {vectors.begin(), vectors.end()});
  return evaluate_terms(std::span(&seq, 1), b, quad).value;
}

Complex contract_rotation(const UnitaryLoop& loop, const LoopForm& form, std::span<const TangentField> vectors) {
  std::vector<TangentField> args{rotation_field(loop)};
  args.insert(args.end(), vectors.begin(), vectors.end());
  return form(loop, args);
}

std::function<Complex(std::span<const double>)> pullback_to_plot(LoopForm form, LoopPlot plot,
                                                                 std::vector<int> indices) {
  if (static_cast<int>(indices.size()) > plot.param_dim())
    throw Error(ErrorCode::Arity, "pullback_to_plot: more indices than plot parameters");
  for (int i : indices)
    if (i < 0 || i >= plot.param_dim()) throw Error(ErrorCode::Domain, "pullback_to_plot: index out of range");
  return [form = std::move(form), plot = std::move(plot), indices = std::move(indices)](std::span<const double> p) {
    for (std::size_t a = 0; a < indices.size(); ++a)
      for (std::size_t b = a + 1; b < indices.size(); ++b)
        if (indices[a] == indices[b]) return Complex(0.0);
    const UnitaryLoop loop = plot.at(p);
    std::vector<TangentField> fields;
    for (int i : indices) fields.push_back(plot.partial(p, i));
    return form(loop, fields);
  };
}

Complex fd_exterior_derivative(const PlotComponent& alpha, std::span<const double> p, std::span<const int> indices,
                               double h, const Box* box) {
  if (!(h > 0.0)) throw Error(ErrorCode::Configuration, "fd_exterior_derivative: step must be positive");
  const int dim = static_cast<int>(p.size());
  for (int i : indices) {
    if (i < 0 || i >= dim) throw Error(ErrorCode::Domain, "fd_exterior_derivative: index out of range");
    if (box && (p[static_cast<std::size_t>(i)] - h < box->lower[static_cast<std::size_t>(i)] ||
                p[static_cast<std::size_t>(i)] + h > box->upper[static_cast<std::size_t>(i)]))
      throw Error(ErrorCode::Domain, "fd_exterior_derivative: point within h of the domain boundary");
  }
  Complex acc = 0.0;
  std::vector<double> q(p.begin(), p.end());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    std::vector<int> rest;
    for (std::size_t m = 0; m < indices.size(); ++m)
      if (m != j) rest.push_back(indices[m]);
    const auto axis = static_cast<std::size_t>(indices[j]);
    q[axis] = p[axis] + h;
    const Complex plus = alpha(q, rest);
    q[axis] = p[axis] - h;
    const Complex minus = alpha(q, rest);
    q[axis] = p[axis];
    const Complex deriv = (plus - minus) / (2.0 * h);
    acc += (j % 2 ? -1.0 : 1.0) * deriv;
  }
  return acc;
}

}  // namespace lchern
