#pragma once

// Least fixed points by Kleene iteration from the zero arrow.  Three entry
// points share the machinery:
//
//   trace(f, s, t)    — feedback along a common summand: for
//                       f : A ⊕ X → B ⊕ X, the loop semantics
//                       Tr(f) = f_BA + Σ_k f_BX ∘ f_XX^k ∘ f_XA : A → B,
//                       computed as the ascending chain u_{n+1} = f_BA + w_n∘f_XA,
//                       w_{n+1} = f_BX + w_n∘f_XX.
//   conway_fix(g, s)  — parameterized recursion: for g : X → S ⊕ X the least
//                       h : X → S with h = [id_S, h] ∘ g.
//   fix_functional(F) — least fixed point of an arbitrary monotone functional
//                       on hom(src, tgt), iterated from the zero arrow.
//
// Every chain is verified to be ascending in the CP order step by step; a
// violation aborts with an error rather than returning a wrong limit.
// Finite iterations record convergence in the result's metadata; traces over
// nat-indexed signatures iterate per requested column on demand and report
// through the shared trace_stats handle instead.

#include <qflow/arrow.hpp>

#include <map>
#include <utility>

namespace qflow {

struct fix_options {
  tolerance tol{};
  long max_iter = default_max_iter;
  // Finite iterations only: called with each Kleene iterate (the exit part
  // u_n for trace; h_n otherwise), after the step is verified monotone.
  std::function<void(const qarrow&)> on_iterate;
};

struct trace_stats {
  bool converged = true;
  long iterations = 0;
};

namespace detail {

inline signature comp_slice(const signature& s, long begin, long count) {
  std::vector<sig_component> cs(s.comps().begin() + begin, s.comps().begin() + begin + count);
  return signature(std::move(cs));
}

inline void check_trace_shape(const qarrow& f, long s_count, long t_count) {
  long x_src = f.source().comp_count() - s_count;
  long x_tgt = f.target().comp_count() - t_count;
  if (s_count < 1 || t_count < 1 || x_src < 1 || x_src != x_tgt)
    throw std::invalid_argument("trace: source/target must split as A+X and B+X");
  for (long p = 0; p < x_src; ++p)
    if (f.source().comps()[s_count + p] != f.target().comps()[t_count + p])
      throw std::invalid_argument("trace: feedback summands of source and target differ");
}

// Sorted-by-loc column arithmetic for the per-column nat iteration.
inline col_t sorted_col(const std::map<block_loc, block_map>& m, const tolerance& tol) {
  col_t out;
  out.reserve(m.size());
  for (const auto& [loc, bm] : m)
    if (!bm.is_zero()) out.emplace_back(loc, bm.compressed(tol));
  return out;
}

inline bool col_leq(const col_t& lo, const col_t& hi, const tolerance& tol) {
  for (const auto& [loc, bm] : hi) {
    const block_map* small = nullptr;
    for (const auto& [l2, bm2] : lo)
      if (l2 == loc) {
        small = &bm2;
        break;
      }
    if (small ? !cp_leq(*small, bm, tol) : !bm.is_cp(tol)) return false;
  }
  // Anything present below but absent above must be (numerically) zero.
  for (const auto& [loc, bm] : lo) {
    bool found = false;
    for (const auto& [l2, bm2] : hi) found = found || l2 == loc;
    if (!found && !cp_leq(bm, block_map::zero(bm.in_dim(), bm.out_dim()), tol)) return false;
  }
  return true;
}

// Per-column Kleene iteration as a forward frontier simulation.  For a
// requested source block j the n-th iterate S_n(j) collects every exit path
// of length ≤ n; the frontier carries the not-yet-exited path sums as CP
// maps into feedback blocks.  Convergence is certified by the in-flight
// mass: everything a later iterate can still add to the column is bounded
// in every entry by tr(Σ_x frontier_x*(1)), so once that trace falls below
// eps_fix the column is final to tolerance.  Feedback that never drains
// (the mass stays put) exhausts the budget and is reported unconverged.
struct nat_trace_engine {
  qarrow f;
  long s_count, t_count;
  tolerance tol;
  long max_iter;
  std::shared_ptr<trace_stats> stats;

  col_t converged_col(const block_loc& j) {
    std::map<block_loc, block_map> u;         // accumulated exits, target blocks
    std::map<block_loc, block_map> frontier;  // in-flight maps, source-side feedback blocks
    frontier.emplace(j, block_map::identity(f.source().dim(j.comp)));

    auto accumulate_into = [this](std::map<block_loc, block_map>& m, const block_loc& loc,
                                  block_map bm) {
      auto it = m.find(loc);
      if (it == m.end())
        m.emplace(loc, bm.compressed(tol));
      else
        it->second = add(it->second, bm).compressed(tol);
    };

    col_t prev;
    for (long n = 1; n <= max_iter; ++n) {
      std::map<block_loc, block_map> next;
      for (const auto& [x, carried] : frontier) {
        if (carried.is_zero()) continue;
        for (const auto& [r, bm] : f.column(x)) {
          block_map moved = compose(bm, carried);
          if (r.comp < t_count)
            accumulate_into(u, r, std::move(moved));
          else
            accumulate_into(next, {r.comp - t_count + s_count, r.nat}, std::move(moved));
        }
      }
      frontier = std::move(next);

      col_t cur = sorted_col(u, tol);
      if (!col_leq(prev, cur, tol))
        throw std::logic_error("trace: iteration chain is not ascending in the CP order");
      prev = std::move(cur);

      double in_flight = 0;
      for (const auto& [x, carried] : frontier)
        in_flight += carried.unit_image().trace().real();
      if (in_flight <= tol.eps_fix) {
        if (stats) stats->iterations = std::max(stats->iterations, n);
        return prev;
      }
    }
    if (stats) {
      stats->iterations = std::max(stats->iterations, max_iter);
      stats->converged = false;
    }
    return prev;
  }
};

}  // namespace detail

// Feedback trace of f : A ⊕ X → B ⊕ X, where A is the first s_count source
// components and B the first t_count target components.
inline qarrow trace(const qarrow& f, long s_count, long t_count, const fix_options& opts = {},
                    std::shared_ptr<trace_stats> stats = nullptr) {
  detail::check_trace_shape(f, s_count, t_count);
  const long x_count = f.source().comp_count() - s_count;
  signature A = detail::comp_slice(f.source(), 0, s_count);
  signature B = detail::comp_slice(f.target(), 0, t_count);

  if (!f.finite()) {
    auto engine = std::make_shared<detail::nat_trace_engine>();
    engine->f = f;
    engine->s_count = s_count;
    engine->t_count = t_count;
    engine->tol = opts.tol;
    engine->max_iter = opts.max_iter;
    engine->stats = stats;
    return qarrow::from_columns(A, B, [engine](const block_loc& j) -> col_t {
      return engine->converged_col(j);
    });
  }

  auto at = [&](std::vector<block_map>& m, long i, long j, long cols) -> block_map& {
    return m[i * cols + j];
  };
  std::vector<block_map> u, w;
  for (long i = 0; i < t_count; ++i)
    for (long j = 0; j < s_count; ++j) u.push_back(block_map::zero(A.dim(j), B.dim(i)));
  for (long i = 0; i < t_count; ++i)
    for (long p = 0; p < x_count; ++p)
      w.push_back(block_map::zero(f.source().dim(s_count + p), B.dim(i)));

  bool converged = false;
  long iters = 0;
  for (long n = 1; n <= opts.max_iter; ++n) {
    std::vector<block_map> u2, w2;
    u2.reserve(u.size());
    w2.reserve(w.size());
    for (long i = 0; i < t_count; ++i)
      for (long j = 0; j < s_count; ++j) {
        block_map acc = f.block(i, j);
        for (long p = 0; p < x_count; ++p)
          acc = add(acc, compose(at(w, i, p, x_count), f.block(t_count + p, j)));
        u2.push_back(acc.compressed(opts.tol));
      }
    for (long i = 0; i < t_count; ++i)
      for (long p = 0; p < x_count; ++p) {
        block_map acc = f.block(i, s_count + p);
        for (long q = 0; q < x_count; ++q)
          acc = add(acc, compose(at(w, i, q, x_count), f.block(t_count + q, s_count + p)));
        w2.push_back(acc.compressed(opts.tol));
      }
    double delta = 0;
    for (size_t k = 0; k < u.size(); ++k) {
      if (!cp_leq(u[k], u2[k], opts.tol))
        throw std::logic_error("trace: iteration chain is not ascending in the CP order");
      delta = std::max(delta, choi_distance(u[k], u2[k]));
    }
    for (size_t k = 0; k < w.size(); ++k) {
      if (!cp_leq(w[k], w2[k], opts.tol))
        throw std::logic_error("trace: iteration chain is not ascending in the CP order");
      delta = std::max(delta, choi_distance(w[k], w2[k]));
    }
    u = std::move(u2);
    w = std::move(w2);
    iters = n;
    if (opts.on_iterate) opts.on_iterate(qarrow::from_dense(A, B, u));
    if (delta <= opts.tol.eps_fix) {
      converged = true;
      break;
    }
  }
  if (stats) {
    stats->converged = stats->converged && converged;
    stats->iterations = std::max(stats->iterations, iters);
  }
  return qarrow::from_dense(A, B, std::move(u), {converged, iters});
}

// Least fixed point of a monotone functional on hom(src, tgt), from zero.
// Finite signatures only: each step is compressed, verified ascending, and
// compared entrywise for convergence.
inline qarrow fix_functional(const std::function<qarrow(const qarrow&)>& F, const signature& src,
                             const signature& tgt, const fix_options& opts = {}) {
  if (!src.is_finite() || !tgt.is_finite())
    throw std::invalid_argument("fix_functional: signatures must be finite");
  qarrow h = zero_arrow(src, tgt);
  for (long n = 1; n <= opts.max_iter; ++n) {
    qarrow h2 = F(h);
    if (!(h2.source() == src) || !(h2.target() == tgt))
      throw std::invalid_argument("fix_functional: functional changed the hom-set");
    if (!h2.finite()) throw std::invalid_argument("fix_functional: functional produced a nat arrow");
    h2 = compress_arrow(h2, opts.tol);
    if (!cp_leq_arrow(h, h2, opts.tol))
      throw std::logic_error("fix_functional: iteration chain is not ascending in the CP order");
    double delta = arrow_entry_dist(h, h2);
    h = std::move(h2);
    if (opts.on_iterate) opts.on_iterate(h);
    if (delta <= opts.tol.eps_fix) {
      h.set_meta({true, n});
      return h;
    }
  }
  h.set_meta({false, opts.max_iter});
  return h;
}

// Least h : X → S with h = [id_S, h] ∘ g for g : X → S ⊕ X, where S is the
// first s_count target components.
inline qarrow conway_fix(const qarrow& g, long s_count, const fix_options& opts = {}) {
  long x_count = g.target().comp_count() - s_count;
  if (s_count < 1 || x_count < 1 || x_count != g.source().comp_count())
    throw std::invalid_argument("conway_fix: target must split as S + X with X the source");
  for (long p = 0; p < x_count; ++p)
    if (g.source().comps()[p] != g.target().comps()[s_count + p])
      throw std::invalid_argument("conway_fix: recursion summand differs from the source");
  if (!g.finite()) throw std::invalid_argument("conway_fix: nat-indexed recursion is not supported");
  signature S = detail::comp_slice(g.target(), 0, s_count);
  signature X = g.source();
  auto F = [&](const qarrow& h) { return compose(copair({identity(S), h}), g); };
  return fix_functional(F, X, S, opts);
}

}  // namespace qflow
