#pragma once

// Classical data inside the quantum category.  A finite set of size n embeds
// as the n-fold sum of one-dimensional blocks (the diagonal algebra ℓ∞(n));
// a function between finite sets embeds as the arrow whose (f(j), j) blocks
// are scalar identities.  The embedding is a faithful functor, sends products
// of sets to tensors of signatures on the nose, and extends to substochastic
// matrices.  Arithmetic over the nat signature is exposed as a small registry
// of named total functions ℕ^k → ℕ.

#include <qflow/arrow.hpp>

#include <map>
#include <string>

namespace qflow {

struct classical_fn {
  long src_size = 0;
  long tgt_size = 0;
  std::vector<long> image;  // image[j] = value at point j

  void validate() const {
    if (src_size < 1 || tgt_size < 1)
      throw std::invalid_argument("classical_fn: sets must be nonempty");
    if (static_cast<long>(image.size()) != src_size)
      throw std::invalid_argument("classical_fn: image table size mismatch");
    for (long v : image)
      if (v < 0 || v >= tgt_size) throw std::invalid_argument("classical_fn: value out of range");
  }

  long operator()(long j) const { return image.at(j); }

  static classical_fn identity(long n) {
    classical_fn f{n, n, {}};
    for (long j = 0; j < n; ++j) f.image.push_back(j);
    return f;
  }

  bool operator==(const classical_fn&) const = default;
};

inline classical_fn compose_fn(const classical_fn& g, const classical_fn& f) {
  f.validate();
  g.validate();
  if (f.tgt_size != g.src_size) throw std::invalid_argument("compose_fn: set mismatch");
  classical_fn h{f.src_size, g.tgt_size, {}};
  for (long j = 0; j < f.src_size; ++j) h.image.push_back(g(f(j)));
  return h;
}

// (f × g)(i, j) = (f(i), g(j)) on pairs indexed left-major: (i, j) ↦ i·|B| + j.
inline classical_fn product_fn(const classical_fn& f, const classical_fn& g) {
  f.validate();
  g.validate();
  classical_fn h{f.src_size * g.src_size, f.tgt_size * g.tgt_size, {}};
  for (long i = 0; i < f.src_size; ++i)
    for (long j = 0; j < g.src_size; ++j) h.image.push_back(f(i) * g.tgt_size + g(j));
  return h;
}

// The diagonal algebra of an n-point set: n one-dimensional blocks.
inline signature ell_infty(long n) {
  if (n < 1) throw std::invalid_argument("ell_infty: set must be nonempty");
  return signature(std::vector<sig_component>(n, sig_component{0, 1}));
}

// Functor action on functions: block (f(j), j) is the scalar identity.
inline qarrow ell_infty_arrow(const classical_fn& f) {
  f.validate();
  auto img = f.image;
  return qarrow::from_columns(ell_infty(f.src_size), ell_infty(f.tgt_size),
                              [img](const block_loc& j) -> col_t {
                                return {{floc(img[j.comp]), block_map::identity(1)}};
                              });
}

// Substochastic matrices (entries ≥ 0, column sums ≤ 1) embed the same way
// with blocks √p·id; deterministic functions are the 0/1 columns.
inline qarrow substochastic_arrow(const cmat& p, const tolerance& tol = {}) {
  for (long j = 0; j < p.cols(); ++j) {
    double colsum = 0;
    for (long i = 0; i < p.rows(); ++i) {
      if (std::abs(p(i, j).imag()) > tol.eps_eq || p(i, j).real() < -tol.eps_eq)
        throw std::invalid_argument("substochastic_arrow: entries must be nonnegative reals");
      colsum += std::max(0.0, p(i, j).real());
    }
    if (colsum > 1.0 + tol.eps_eq)
      throw std::invalid_argument("substochastic_arrow: column sum exceeds 1");
  }
  std::vector<block_map> blocks;
  for (long i = 0; i < p.rows(); ++i)
    for (long j = 0; j < p.cols(); ++j) {
      double w = std::max(0.0, p(i, j).real());
      blocks.push_back(w == 0.0 ? block_map::zero(1, 1)
                                : block_map::from_kraus(1, 1, {std::sqrt(w) * cidentity(1)}));
    }
  return qarrow::from_dense(ell_infty(p.cols()), ell_infty(p.rows()), std::move(blocks));
}

// Probability table of a classical state: the diagonal weights.
inline std::vector<double> distribution_of(const state_vector& s) {
  if (!s.sig.is_finite()) throw std::invalid_argument("distribution_of: finite signatures only");
  std::vector<double> p(s.sig.comp_count(), 0.0);
  for (const auto& [loc, m] : s.parts) p[loc.comp] += m.trace().real();
  return p;
}

// The embedding turns the set product into the signature tensor on the
// nose: pair (i, j) ↦ component i·|B| + j, which is exactly the tensor
// component layout, so the mediating permutation is the identity.
inline block_permutation product_iso(long a, long b) {
  signature t = tensor(ell_infty(a), ell_infty(b));
  return identity_permutation(t);
}

// A point on which two functions disagree, if any: applying the embedded
// arrows to that point state lands in different summands, so the functor
// is faithful.
inline std::optional<long> faithfulness_witness(const classical_fn& f, const classical_fn& g) {
  f.validate();
  g.validate();
  if (f.src_size != g.src_size || f.tgt_size != g.tgt_size)
    throw std::invalid_argument("faithfulness_witness: mismatched sets");
  for (long j = 0; j < f.src_size; ++j)
    if (f(j) != g(j)) return j;
  return std::nullopt;
}

// --- arithmetic over the nat signature ---

struct nat_builtin {
  std::string name;
  long arity = 1;
  std::function<long(const std::vector<long>&)> fn;
};

inline const std::map<std::string, nat_builtin>& standard_nat_builtins() {
  static const std::map<std::string, nat_builtin> table = [] {
    std::map<std::string, nat_builtin> t;
    t["succ"] = {"succ", 1, [](const std::vector<long>& a) { return a[0] + 1; }};
    t["pred"] = {"pred", 1, [](const std::vector<long>& a) { return std::max(0L, a[0] - 1); }};
    t["add"] = {"add", 2, [](const std::vector<long>& a) { return a[0] + a[1]; }};
    t["mul"] = {"mul", 2, [](const std::vector<long>& a) { return a[0] * a[1]; }};
    return t;
  }();
  return table;
}

}  // namespace qflow
