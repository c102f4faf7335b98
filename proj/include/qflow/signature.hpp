#pragma once

// Signatures: the objects arrows run between.  A signature is a finite list
// of components (nat_rank, dim); component (r, d) stands for ℕ^r-many blocks,
// each a d×d matrix algebra.  All-rank-0 signatures are the finite ones
// ("(n1,n2,...)"); the countable classical object is the single component
// (1,1) ("nat"); tensoring finite and nat-like signatures mixes the two.
// Blocks are addressed by a component index plus a tuple of nat coordinates.

#include <qflow/matrix.hpp>

#include <compare>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace qflow {

struct sig_component {
  long nat_rank = 0;
  long dim = 1;
  friend bool operator==(const sig_component&, const sig_component&) = default;
};

class signature {
 public:
  signature() = default;
  explicit signature(std::vector<sig_component> comps) : comps_(std::move(comps)) {
    for (const auto& c : comps_)
      if (c.dim < 1 || c.nat_rank < 0)
        throw std::invalid_argument("signature: component dims must be >= 1");
  }

  static signature unit() { return finite({1}); }

  static signature finite(const std::vector<long>& dims) {
    if (dims.empty()) throw std::invalid_argument("signature: empty block list");
    std::vector<sig_component> cs;
    cs.reserve(dims.size());
    for (long d : dims) cs.push_back({0, d});
    return signature(std::move(cs));
  }

  static signature nat() { return signature({{1, 1}}); }

  const std::vector<sig_component>& comps() const { return comps_; }
  long comp_count() const { return static_cast<long>(comps_.size()); }
  long dim(long comp) const { return comps_.at(comp).dim; }
  long rank(long comp) const { return comps_.at(comp).nat_rank; }

  bool is_finite() const {
    for (const auto& c : comps_)
      if (c.nat_rank != 0) return false;
    return true;
  }

  bool is_nat() const { return comps_.size() == 1 && comps_[0] == sig_component{1, 1}; }

  // Σ dim² over all blocks; only defined for finite signatures.
  long total_dim() const {
    if (!is_finite()) throw std::invalid_argument("total_dim: signature has nat-indexed components");
    long t = 0;
    for (const auto& c : comps_) t += c.dim * c.dim;
    return t;
  }

  std::vector<long> finite_dims() const {
    if (!is_finite()) throw std::invalid_argument("finite_dims: signature has nat-indexed components");
    std::vector<long> d;
    d.reserve(comps_.size());
    for (const auto& c : comps_) d.push_back(c.dim);
    return d;
  }

  std::string str() const {
    if (is_nat()) return "nat";
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < comps_.size(); ++i) {
      if (i) os << ",";
      const auto& c = comps_[i];
      if (c.nat_rank == 0) {
        os << c.dim;
      } else {
        if (c.dim != 1) os << c.dim << "*";
        os << "nat";
        if (c.nat_rank > 1) os << "^" << c.nat_rank;
      }
    }
    os << ")";
    return os.str();
  }

  friend bool operator==(const signature&, const signature&) = default;

 private:
  std::vector<sig_component> comps_;
};

// Block address: component index plus nat coordinates (length = that
// component's nat_rank; empty for finite components).
struct block_loc {
  long comp = 0;
  std::vector<long> nat;

  friend bool operator==(const block_loc&, const block_loc&) = default;
  friend auto operator<=>(const block_loc& a, const block_loc& b) {
    if (auto c = a.comp <=> b.comp; c != 0) return c;
    return a.nat <=> b.nat;
  }
};

inline block_loc floc(long comp) { return {comp, {}}; }

inline void check_loc(const signature& s, const block_loc& l) {
  if (l.comp < 0 || l.comp >= s.comp_count())
    throw std::out_of_range("block_loc: component out of range");
  if (static_cast<long>(l.nat.size()) != s.rank(l.comp))
    throw std::invalid_argument("block_loc: nat coordinate arity mismatch");
  for (long v : l.nat)
    if (v < 0) throw std::invalid_argument("block_loc: negative nat coordinate");
}

// Concatenation of component lists.
inline signature direct_sum(const signature& a, const signature& b) {
  std::vector<sig_component> cs = a.comps();
  cs.insert(cs.end(), b.comps().begin(), b.comps().end());
  return signature(std::move(cs));
}

// Lexicographic, left factor major: component (i,j) of a⊗b sits at flat index
// i·|b| + j with dim n_i·m_j; nat coordinates concatenate (a's first).
inline signature tensor(const signature& a, const signature& b) {
  std::vector<sig_component> cs;
  cs.reserve(a.comps().size() * b.comps().size());
  for (const auto& ca : a.comps())
    for (const auto& cb : b.comps()) cs.push_back({ca.nat_rank + cb.nat_rank, ca.dim * cb.dim});
  return signature(std::move(cs));
}

// A dim- and rank-preserving bijection between the components of two
// signatures; map[j] is the target component of source component j.
struct block_permutation {
  signature source;
  signature target;
  std::vector<long> map;

  void validate() const {
    if (source.comp_count() != target.comp_count() ||
        static_cast<long>(map.size()) != source.comp_count())
      throw std::invalid_argument("block_permutation: size mismatch");
    std::vector<bool> hit(map.size(), false);
    for (long j = 0; j < static_cast<long>(map.size()); ++j) {
      long i = map[j];
      if (i < 0 || i >= static_cast<long>(map.size()) || hit[i])
        throw std::invalid_argument("block_permutation: not a bijection");
      hit[i] = true;
      if (source.comps()[j] != target.comps()[i])
        throw std::invalid_argument("block_permutation: component shape not preserved");
    }
  }

  block_permutation inverse() const {
    block_permutation inv{target, source, std::vector<long>(map.size())};
    for (size_t j = 0; j < map.size(); ++j) inv.map[map[j]] = static_cast<long>(j);
    return inv;
  }
};

inline block_permutation identity_permutation(const signature& s) {
  block_permutation p{s, s, std::vector<long>(s.comp_count())};
  std::iota(p.map.begin(), p.map.end(), 0L);
  return p;
}

// The canonical iso a⊗(b⊕c) ≅ (a⊗b)⊕(a⊗c) realized as a pure index
// permutation of components.
inline block_permutation distributivity_iso(const signature& a, const signature& b,
                                            const signature& c) {
  const long ka = a.comp_count(), kb = b.comp_count(), kc = c.comp_count();
  block_permutation p{tensor(a, direct_sum(b, c)),
                      direct_sum(tensor(a, b), tensor(a, c)),
                      std::vector<long>(ka * (kb + kc))};
  for (long i = 0; i < ka; ++i)
    for (long j = 0; j < kb + kc; ++j) {
      long src = i * (kb + kc) + j;
      p.map[src] = (j < kb) ? i * kb + j : ka * kb + i * kc + (j - kb);
    }
  p.validate();
  return p;
}

}  // namespace qflow
