#pragma once

// Arrows between signatures: block matrices (f_ij) of CP maps, one block per
// (target, source) block pair, carried in the Schrödinger (state-flow)
// orientation.  The well-formedness invariant is trace-nonincrease per
// source column: Σ_i (f_ij)*(1) ≤ 1.  Finite×finite arrows store a dense
// row-major block matrix; arrows touching nat-indexed signatures store a
// lazy column function (column-finite by construction) with a memoized,
// write-once cache.  Blocks absent from a column are zero.

#include <qflow/cpmap.hpp>
#include <qflow/signature.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace qflow {

struct arrow_meta {
  bool converged = true;
  long iterations = 0;
};

inline arrow_meta merge_meta(const arrow_meta& a, const arrow_meta& b) {
  return {a.converged && b.converged, std::max(a.iterations, b.iterations)};
}

using col_entry = std::pair<block_loc, block_map>;
using col_t = std::vector<col_entry>;
using col_fn = std::function<col_t(const block_loc&)>;

inline void accumulate(col_t& col, const block_loc& loc, const block_map& bm) {
  if (bm.is_zero()) return;
  for (auto& [l, m] : col)
    if (l == loc) {
      m = add(m, bm);
      return;
    }
  col.emplace_back(loc, bm);
}

class qarrow {
 public:
  qarrow() = default;

  // Build from a column function; finite arrows are materialized densely.
  static qarrow from_columns(signature src, signature tgt, const col_fn& fn,
                             arrow_meta meta = {}) {
    qarrow a;
    a.src_ = std::move(src);
    a.tgt_ = std::move(tgt);
    a.meta_ = meta;
    if (a.src_.is_finite() && a.tgt_.is_finite()) {
      auto blocks = std::make_shared<std::vector<block_map>>();
      blocks->reserve(a.tgt_.comp_count() * a.src_.comp_count());
      for (long i = 0; i < a.tgt_.comp_count(); ++i)
        for (long j = 0; j < a.src_.comp_count(); ++j)
          blocks->push_back(block_map::zero(a.src_.dim(j), a.tgt_.dim(i)));
      for (long j = 0; j < a.src_.comp_count(); ++j)
        for (const auto& [loc, bm] : fn(floc(j))) {
          a.check_block_shape(loc, floc(j), bm);
          long idx = loc.comp * a.src_.comp_count() + j;
          (*blocks)[idx] = add((*blocks)[idx], bm);
        }
      a.dense_ = std::move(blocks);
    } else {
      a.colfn_ = fn;
      a.memo_ = std::make_shared<std::map<block_loc, col_t>>();
    }
    return a;
  }

  static qarrow from_dense(signature src, signature tgt, std::vector<block_map> blocks,
                           arrow_meta meta = {}) {
    if (!src.is_finite() || !tgt.is_finite())
      throw std::invalid_argument("from_dense: signatures must be finite");
    if (static_cast<long>(blocks.size()) != src.comp_count() * tgt.comp_count())
      throw std::invalid_argument("from_dense: block count mismatch");
    qarrow a;
    a.src_ = std::move(src);
    a.tgt_ = std::move(tgt);
    a.meta_ = meta;
    for (long i = 0; i < a.tgt_.comp_count(); ++i)
      for (long j = 0; j < a.src_.comp_count(); ++j) {
        const auto& b = blocks[i * a.src_.comp_count() + j];
        if (b.in_dim() != a.src_.dim(j) || b.out_dim() != a.tgt_.dim(i))
          throw std::invalid_argument("from_dense: block shape mismatch");
      }
    a.dense_ = std::make_shared<std::vector<block_map>>(std::move(blocks));
    return a;
  }

  const signature& source() const { return src_; }
  const signature& target() const { return tgt_; }
  bool finite() const { return static_cast<bool>(dense_); }
  const arrow_meta& meta() const { return meta_; }
  void set_meta(arrow_meta m) { meta_ = m; }

  // Dense block accessor (finite arrows only).
  const block_map& block(long i, long j) const {
    if (!dense_) throw std::logic_error("qarrow::block: arrow is not densely stored");
    return (*dense_)[i * src_.comp_count() + j];
  }

  // Nonzero blocks of one source column, lazily computed and cached for
  // nat-indexed arrows.
  col_t column(const block_loc& j) const {
    check_loc(src_, j);
    if (dense_) {
      col_t col;
      for (long i = 0; i < tgt_.comp_count(); ++i) {
        const block_map& b = block(i, j.comp);
        if (!b.is_zero()) col.emplace_back(floc(i), b);
      }
      return col;
    }
    if (auto it = memo_->find(j); it != memo_->end()) return it->second;
    col_t col = colfn_(j);
    for (const auto& [loc, bm] : col) check_block_shape(loc, j, bm);
    memo_->emplace(j, col);
    return col;
  }

 private:
  void check_block_shape(const block_loc& out, const block_loc& in, const block_map& bm) const {
    check_loc(tgt_, out);
    if (bm.in_dim() != src_.dim(in.comp) || bm.out_dim() != tgt_.dim(out.comp))
      throw std::invalid_argument("qarrow: block shape does not match signatures");
  }

  signature src_, tgt_;
  std::shared_ptr<const std::vector<block_map>> dense_;
  col_fn colfn_;
  std::shared_ptr<std::map<block_loc, col_t>> memo_;
  arrow_meta meta_;
};

inline qarrow identity(const signature& s) {
  return qarrow::from_columns(
      s, s, [s](const block_loc& j) -> col_t { return {{j, block_map::identity(s.dim(j.comp))}}; });
}

inline qarrow zero_arrow(const signature& src, const signature& tgt) {
  return qarrow::from_columns(src, tgt, [](const block_loc&) -> col_t { return {}; });
}

inline qarrow compose(const qarrow& g, const qarrow& f) {
  if (!(f.target() == g.source())) throw std::invalid_argument("compose: signature mismatch");
  return qarrow::from_columns(
      f.source(), g.target(),
      [g, f](const block_loc& j) -> col_t {
        col_t out;
        for (const auto& [p, fm] : f.column(j))
          for (const auto& [i, gm] : g.column(p)) accumulate(out, i, compose(gm, fm));
        return out;
      },
      merge_meta(f.meta(), g.meta()));
}

// Pointwise sum of two arrows in the same hom-set.  The result is only a
// valid arrow when the columns stay jointly trace-nonincreasing — the caller
// guarantees that (e.g. summing branches guarded by orthogonal projections).
inline qarrow arrow_sum(const qarrow& f, const qarrow& g) {
  if (!(f.source() == g.source()) || !(f.target() == g.target()))
    throw std::invalid_argument("arrow_sum: signature mismatch");
  return qarrow::from_columns(
      f.source(), f.target(),
      [f, g](const block_loc& j) -> col_t {
        col_t col = f.column(j);
        for (const auto& [loc, bm] : g.column(j)) accumulate(col, loc, bm);
        return col;
      },
      merge_meta(f.meta(), g.meta()));
}

// Replace every block's Kraus presentation by a canonical one of minimal
// length (finite arrows).
inline qarrow compress_arrow(const qarrow& f, const tolerance& tol = {}) {
  if (!f.finite()) throw std::invalid_argument("compress_arrow: arrow has nat-indexed signature");
  std::vector<block_map> blocks;
  for (long i = 0; i < f.target().comp_count(); ++i)
    for (long j = 0; j < f.source().comp_count(); ++j)
      blocks.push_back(f.block(i, j).compressed(tol));
  return qarrow::from_dense(f.source(), f.target(), std::move(blocks), f.meta());
}

// Injection κ_k into a direct sum of signatures.
inline qarrow injection(const std::vector<signature>& parts, size_t k) {
  if (k >= parts.size()) throw std::out_of_range("injection: part index");
  signature total = parts[0];
  long offset = 0;
  for (size_t i = 1; i < parts.size(); ++i) total = direct_sum(total, parts[i]);
  for (size_t i = 0; i < k; ++i) offset += parts[i].comp_count();
  return qarrow::from_columns(parts[k], total, [offset, &parts, k](const block_loc& j) -> col_t {
    return {{{j.comp + offset, j.nat}, block_map::identity(parts[k].dim(j.comp))}};
  });
}

// Copairing [f_0, ..., f_n]: ⊕ sources → common target.
inline qarrow copair(const std::vector<qarrow>& fs) {
  if (fs.empty()) throw std::invalid_argument("copair: empty list");
  signature src = fs[0].source();
  arrow_meta meta = fs[0].meta();
  for (size_t i = 1; i < fs.size(); ++i) {
    if (!(fs[i].target() == fs[0].target()))
      throw std::invalid_argument("copair: target mismatch");
    src = direct_sum(src, fs[i].source());
    meta = merge_meta(meta, fs[i].meta());
  }
  std::vector<long> offsets;
  long off = 0;
  for (const auto& f : fs) {
    offsets.push_back(off);
    off += f.source().comp_count();
  }
  return qarrow::from_columns(
      src, fs[0].target(),
      [fs, offsets](const block_loc& j) -> col_t {
        size_t k = fs.size() - 1;
        while (j.comp < offsets[k]) --k;
        return fs[k].column({j.comp - offsets[k], j.nat});
      },
      meta);
}

// Block-diagonal sum f_0 ⊕ ... ⊕ f_n.
inline qarrow dsum_arrow(const std::vector<qarrow>& fs) {
  if (fs.empty()) throw std::invalid_argument("dsum_arrow: empty list");
  std::vector<signature> tgts;
  for (const auto& f : fs) tgts.push_back(f.target());
  std::vector<qarrow> injected;
  for (size_t k = 0; k < fs.size(); ++k) injected.push_back(compose(injection(tgts, k), fs[k]));
  return copair(injected);
}

inline qarrow tensor_arrow(const qarrow& f, const qarrow& g) {
  signature src = tensor(f.source(), g.source());
  signature tgt = tensor(f.target(), g.target());
  const long gs = g.source().comp_count(), gt = g.target().comp_count();
  auto f_src = f.source();
  return qarrow::from_columns(
      src, tgt,
      [f, g, gs, gt, f_src](const block_loc& j) -> col_t {
        long jf = j.comp / gs, jg = j.comp % gs;
        long rf = f_src.rank(jf);
        block_loc lf{jf, {j.nat.begin(), j.nat.begin() + rf}};
        block_loc lg{jg, {j.nat.begin() + rf, j.nat.end()}};
        col_t out;
        for (const auto& [i_f, bf] : f.column(lf))
          for (const auto& [i_g, bg] : g.column(lg)) {
            std::vector<long> nat = i_f.nat;
            nat.insert(nat.end(), i_g.nat.begin(), i_g.nat.end());
            accumulate(out, {i_f.comp * gt + i_g.comp, std::move(nat)}, tensor(bf, bg));
          }
        return out;
      },
      merge_meta(f.meta(), g.meta()));
}

// Blockwise adjoint with source/target swapped; the Heisenberg picture of f.
// Defined for finite arrows (nat-indexed arrows are column- but not
// row-finite, so their dual has no computable columns).
inline qarrow dualize(const qarrow& f) {
  if (!f.finite()) throw std::invalid_argument("dualize: arrow has nat-indexed signature");
  std::vector<block_map> blocks;
  blocks.reserve(f.source().comp_count() * f.target().comp_count());
  for (long j = 0; j < f.source().comp_count(); ++j)
    for (long i = 0; i < f.target().comp_count(); ++i) blocks.push_back(f.block(i, j).dual());
  return qarrow::from_dense(f.target(), f.source(), std::move(blocks), f.meta());
}

// Identity-block arrow along a component permutation (coherence isos:
// associators, symmetries, distributivities are all of this shape).
inline qarrow permutation_arrow(const block_permutation& p) {
  p.validate();
  auto map = p.map;
  auto src = p.source;
  return qarrow::from_columns(p.source, p.target, [map, src](const block_loc& j) -> col_t {
    return {{{map[j.comp], j.nat}, block_map::identity(src.dim(j.comp))}};
  });
}

inline qarrow unitary_lift(const cmat& u, const tolerance& tol = {}) {
  if (u.rows() != u.cols()) throw std::invalid_argument("unitary_lift: non-square");
  if (!approx_eq(u.adjoint() * u, cidentity(u.rows()), tol.eps_eq))
    throw std::invalid_argument("unitary_lift: matrix is not unitary within tolerance");
  signature s = signature::finite({u.rows()});
  return qarrow::from_dense(s, s, {block_map::from_kraus(u.rows(), u.rows(), {u})});
}

// The retract bit ⇄ qbit: ι creates diag(x,w) from a classical pair,
// p measures in the computational basis.  p∘ι = id exactly; ι∘p is the
// dephasing (diagonal-projection) channel.
struct qbit_structure_t {
  signature qbit = signature::finite({2});
  signature bit = signature::finite({1, 1});
  qarrow iota;
  qarrow p;
};

inline qbit_structure_t qbit_structure() {
  qbit_structure_t q;
  cmat ket0 = czero(2, 1), ket1 = czero(2, 1);
  ket0(0, 0) = 1.0;
  ket1(1, 0) = 1.0;
  q.iota = qarrow::from_dense(q.bit, q.qbit,
                              {block_map::from_kraus(1, 2, {ket0}), block_map::from_kraus(1, 2, {ket1})});
  q.p = qarrow::from_dense(q.qbit, q.bit,
                           {block_map::from_kraus(2, 1, {ket0.adjoint()}),
                            block_map::from_kraus(2, 1, {ket1.adjoint()})});
  return q;
}

// --- states and effects ---

// Finitely supported family of per-block positive matrices with Σ tr ≤ 1.
struct state_vector {
  signature sig;
  std::map<block_loc, cmat> parts;

  double total_trace() const {
    double t = 0;
    for (const auto& [loc, m] : parts) t += m.trace().real();
    return t;
  }

  void validate(const tolerance& tol = {}) const {
    for (const auto& [loc, m] : parts) {
      check_loc(sig, loc);
      if (m.rows() != sig.dim(loc.comp) || m.cols() != sig.dim(loc.comp))
        throw std::invalid_argument("state_vector: block shape mismatch");
      if (!is_psd(m, tol)) throw std::invalid_argument("state_vector: block is not PSD");
    }
    if (total_trace() > 1.0 + tol.eps_eq)
      throw std::invalid_argument("state_vector: total trace exceeds 1");
  }

  static state_vector point(const signature& s, const block_loc& loc, double weight = 1.0) {
    check_loc(s, loc);
    state_vector v{s, {}};
    v.parts[loc] = weight * cidentity(s.dim(loc.comp)) / static_cast<double>(s.dim(loc.comp));
    return v;
  }

  static state_vector of_block(const signature& s, const block_loc& loc, const cmat& m) {
    state_vector v{s, {}};
    v.parts[loc] = m;
    return v;
  }
};

// Per-block effects (0 ≤ e ≤ 1); absent blocks read as zero.
struct effect_vector {
  signature sig;
  std::map<block_loc, cmat> parts;

  void validate(const tolerance& tol = {}) const {
    for (const auto& [loc, m] : parts) {
      check_loc(sig, loc);
      if (m.rows() != sig.dim(loc.comp) || m.cols() != sig.dim(loc.comp))
        throw std::invalid_argument("effect_vector: block shape mismatch");
      if (!is_effect(m, tol)) throw std::invalid_argument("effect_vector: block is not an effect");
    }
  }

  static effect_vector identity(const signature& s) {
    if (!s.is_finite()) throw std::invalid_argument("effect_vector: identity needs finite signature");
    effect_vector e{s, {}};
    for (long c = 0; c < s.comp_count(); ++c) e.parts[floc(c)] = cidentity(s.dim(c));
    return e;
  }

  static effect_vector of_block(const signature& s, const block_loc& loc, const cmat& m) {
    effect_vector e{s, {}};
    e.parts[loc] = m;
    return e;
  }
};

// Schrödinger action on states: out_i = Σ_j f_ij(in_j).
inline state_vector apply(const qarrow& f, const state_vector& in) {
  if (!(in.sig == f.source())) throw std::invalid_argument("apply: state signature mismatch");
  state_vector out{f.target(), {}};
  for (const auto& [j, rho] : in.parts) {
    if (max_abs(rho) == 0.0) continue;
    for (const auto& [i, bm] : f.column(j)) {
      cmat img = bm.apply_s(rho);
      auto it = out.parts.find(i);
      if (it == out.parts.end())
        out.parts.emplace(i, std::move(img));
      else
        it->second += img;
    }
  }
  return out;
}

// Heisenberg action on effects: pre_j = Σ_i (f_ij)*(post_i).  Finite only.
inline effect_vector wp(const qarrow& f, const effect_vector& post) {
  if (!(post.sig == f.target())) throw std::invalid_argument("wp: effect signature mismatch");
  if (!f.finite()) throw std::invalid_argument("wp: arrow has nat-indexed signature");
  effect_vector pre{f.source(), {}};
  for (long j = 0; j < f.source().comp_count(); ++j) {
    cmat acc = czero(f.source().dim(j), f.source().dim(j));
    for (long i = 0; i < f.target().comp_count(); ++i) {
      auto it = post.parts.find(floc(i));
      if (it == post.parts.end()) continue;
      if (f.block(i, j).is_zero()) continue;
      acc += f.block(i, j).apply_h(it->second);
    }
    pre.parts[floc(j)] = acc;
  }
  return pre;
}

// Σ_i tr(e_i ρ_i): the probability of observing effect e on state ρ.
inline double pairing(const effect_vector& e, const state_vector& s) {
  if (!(e.sig == s.sig)) throw std::invalid_argument("pairing: signature mismatch");
  double acc = 0;
  for (const auto& [loc, rho] : s.parts) {
    auto it = e.parts.find(loc);
    if (it != e.parts.end()) acc += (it->second * rho).trace().real();
  }
  return acc;
}

// |⟨wp(f,e), s⟩ − ⟨e, f(s)⟩| normalized: the two pictures must price every
// (effect, state) pair identically.
inline double arrow_duality_residual(const qarrow& f, const effect_vector& post,
                                     const state_vector& in) {
  double lhs = pairing(wp(f, post), in);
  double rhs = pairing(post, apply(f, in));
  return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

// --- arrow-level predicates (finite) ---

inline double arrow_entry_dist(const qarrow& f, const qarrow& g) {
  if (!(f.source() == g.source()) || !(f.target() == g.target()))
    throw std::invalid_argument("arrow_entry_dist: signature mismatch");
  if (!f.finite() || !g.finite())
    throw std::invalid_argument("arrow_entry_dist: arrows must be finite");
  double d = 0;
  for (long i = 0; i < f.target().comp_count(); ++i)
    for (long j = 0; j < f.source().comp_count(); ++j)
      d = std::max(d, choi_distance(f.block(i, j), g.block(i, j)));
  return d;
}

inline bool cp_leq_arrow(const qarrow& f, const qarrow& g, const tolerance& tol = {}) {
  if (!(f.source() == g.source()) || !(f.target() == g.target()))
    throw std::invalid_argument("cp_leq_arrow: signature mismatch");
  if (!f.finite() || !g.finite())
    throw std::invalid_argument("cp_leq_arrow: arrows must be finite");
  for (long i = 0; i < f.target().comp_count(); ++i)
    for (long j = 0; j < f.source().comp_count(); ++j)
      if (!cp_leq(f.block(i, j), g.block(i, j), tol)) return false;
  return true;
}

// Column condition Σ_i (f_ij)*(1) ≤ 1 at one source block.
inline cmat column_unit_image(const qarrow& f, const block_loc& j) {
  long d = f.source().dim(j.comp);
  cmat acc = czero(d, d);
  for (const auto& [i, bm] : f.column(j)) acc += bm.unit_image();
  return acc;
}

inline bool column_trace_nonincreasing(const qarrow& f, const block_loc& j,
                                       const tolerance& tol = {}) {
  return loewner_leq(column_unit_image(f, j), cidentity(f.source().dim(j.comp)), tol);
}

inline bool arrow_trace_nonincreasing(const qarrow& f, const tolerance& tol = {}) {
  if (!f.finite())
    throw std::invalid_argument("arrow_trace_nonincreasing: arrow has nat-indexed signature");
  for (long j = 0; j < f.source().comp_count(); ++j)
    if (!column_trace_nonincreasing(f, floc(j), tol)) return false;
  return true;
}

inline bool arrow_trace_preserving(const qarrow& f, const tolerance& tol = {}) {
  if (!f.finite())
    throw std::invalid_argument("arrow_trace_preserving: arrow has nat-indexed signature");
  for (long j = 0; j < f.source().comp_count(); ++j)
    if (!approx_eq(column_unit_image(f, floc(j)), cidentity(f.source().dim(j)), tol.eps_eq))
      return false;
  return true;
}

inline bool arrow_blocks_cp(const qarrow& f, const tolerance& tol = {}) {
  if (!f.finite()) throw std::invalid_argument("arrow_blocks_cp: arrow has nat-indexed signature");
  for (long i = 0; i < f.target().comp_count(); ++i)
    for (long j = 0; j < f.source().comp_count(); ++j)
      if (!f.block(i, j).is_cp(tol)) return false;
  return true;
}

// Entrywise-limit least upper bound of an ascending chain: validates the
// chain, returns its last element, flagged unconverged unless the final
// successive difference is ≤ eps_fix.
inline qarrow lub_chain(const std::vector<qarrow>& chain, const tolerance& tol = {}) {
  if (chain.empty()) throw std::invalid_argument("lub_chain: empty chain");
  for (size_t k = 0; k + 1 < chain.size(); ++k)
    if (!cp_leq_arrow(chain[k], chain[k + 1], tol))
      throw std::invalid_argument("lub_chain: sequence is not an ascending chain");
  qarrow last = chain.back();
  arrow_meta meta = last.meta();
  meta.iterations = static_cast<long>(chain.size());
  meta.converged =
      chain.size() < 2 || arrow_entry_dist(chain[chain.size() - 2], chain.back()) <= tol.eps_fix;
  last.set_meta(meta);
  return last;
}

}  // namespace qflow
