#pragma once

// Static analysis and denotational semantics for the language in ast.hpp.
//
// A context is an ordered list of typed variables.  Its signature: one
// component per assignment of the bit variables (leftmost variable = most
// significant digit), one nat coordinate per nat variable (in declaration
// order), and each component is the full algebra on the qbit wires (leftmost
// wire = most significant factor).  Programs denote arrows between the
// signatures of their entry and exit contexts; every construct is built from
// the category operations, loops through the feedback trace, and procedure
// recursion through a joint Kleene iteration per call-graph cycle.

#include <qflow/arrow.hpp>
#include <qflow/ast.hpp>
#include <qflow/classical.hpp>
#include <qflow/fixpoint.hpp>
#include <qflow/gates.hpp>
#include <qflow/parse.hpp>

#include <algorithm>
#include <set>

namespace qflow {

struct type_error : std::runtime_error {
  src_pos pos;
  type_error(const std::string& msg, src_pos p)
      : std::runtime_error(msg + " (line " + std::to_string(p.line) + ", col " +
                           std::to_string(p.col) + ")"),
        pos(p) {}
};

struct context {
  std::vector<std::pair<std::string, qtype>> vars;

  long find(const std::string& name) const {
    for (size_t i = 0; i < vars.size(); ++i)
      if (vars[i].first == name) return static_cast<long>(i);
    return -1;
  }

  long count(qtype t) const {
    long n = 0;
    for (const auto& v : vars) n += v.second == t ? 1 : 0;
    return n;
  }

  // Position among the variables of the same type, in declaration order.
  long typed_pos(long index) const {
    long p = 0;
    for (long j = 0; j < index; ++j) p += vars[j].second == vars[index].second ? 1 : 0;
    return p;
  }

  signature sig() const {
    long bits = count(qtype::bit_t), qbits = count(qtype::qbit_t), nats = count(qtype::nat_t);
    return signature(std::vector<sig_component>(1L << bits, sig_component{nats, 1L << qbits}));
  }

  std::string str() const {
    std::string s;
    for (const auto& [n, t] : vars) {
      if (!s.empty()) s += ", ";
      s += n + ":" + type_name(t);
    }
    return s.empty() ? "(empty)" : s;
  }

  bool operator==(const context&) const = default;
};

// "a:bit, q:qbit, n:nat" — comma-separated typed names; "" is the empty context.
inline context parse_context(const std::string& text) {
  context ctx;
  size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  while (i < text.size()) {
    std::string name;
    while (i < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
      name.push_back(text[i++]);
    skip_ws();
    if (name.empty() || i >= text.size() || text[i] != ':')
      throw std::invalid_argument("context: expected name:type at '" + text.substr(i) + "'");
    ++i;
    skip_ws();
    std::string ty;
    while (i < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
      ty.push_back(text[i++]);
    qtype t;
    if (ty == "bit")
      t = qtype::bit_t;
    else if (ty == "qbit")
      t = qtype::qbit_t;
    else if (ty == "nat")
      t = qtype::nat_t;
    else
      throw std::invalid_argument("context: unknown type '" + ty + "'");
    if (ctx.find(name) >= 0) throw std::invalid_argument("context: duplicate name '" + name + "'");
    ctx.vars.emplace_back(name, t);
    skip_ws();
    if (i < text.size()) {
      if (text[i] != ',') throw std::invalid_argument("context: expected ','");
      ++i;
      skip_ws();
    }
  }
  return ctx;
}

namespace detail {

// Digit strings are most-significant-first: position 0 is the leftmost digit.
inline long get_digit(long word, long p, long n) { return (word >> (n - 1 - p)) & 1L; }
inline long set_digit(long word, long p, long n, long v) {
  long s = n - 1 - p;
  return (word & ~(1L << s)) | (v << s);
}
inline long insert_digit(long word, long p, long n, long v) {
  long low = n - p;
  long upper = word >> low;
  long lower = word & ((1L << low) - 1);
  return (((upper << 1) | v) << low) | lower;
}
inline long remove_digit(long word, long p, long n) {
  long s = n - 1 - p;
  long upper = word >> (s + 1);
  long lower = word & ((1L << s) - 1);
  return (upper << s) | lower;
}

// ⟨b| on wire w of an nq-wire register: maps dimension 2^nq to 2^(nq-1).
inline cmat wire_bra(long w, long b, long nq) {
  long rows = 1L << (nq - 1);
  cmat m = czero(rows, 1L << nq);
  for (long j = 0; j < rows; ++j) m(j, insert_digit(j, w, nq - 1, b)) = 1.0;
  return m;
}

// A k-wire gate embedded into nq wires at the given positions (argument
// order = gate significance order, first argument most significant).
inline cmat gate_embed(const cmat& u, const std::vector<long>& pos, long nq) {
  long dim = 1L << nq;
  long k = static_cast<long>(pos.size());
  std::vector<bool> in_gate(nq, false);
  for (long p : pos) in_gate[p] = true;
  cmat full = czero(dim, dim);
  for (long bi = 0; bi < dim; ++bi)
    for (long bj = 0; bj < dim; ++bj) {
      bool rest_eq = true;
      for (long w = 0; w < nq && rest_eq; ++w)
        if (!in_gate[w]) rest_eq = get_digit(bi, w, nq) == get_digit(bj, w, nq);
      if (!rest_eq) continue;
      long gi = 0, gj = 0;
      for (long t = 0; t < k; ++t) {
        gi = gi * 2 + get_digit(bi, pos[t], nq);
        gj = gj * 2 + get_digit(bj, pos[t], nq);
      }
      full(bi, bj) = u(gi, gj);
    }
  return full;
}

}  // namespace detail

// The exact arrow that reorders a context: bit digits and nat coordinates
// are re-indexed, qbit wires are permuted by a basis-permutation unitary.
inline qarrow context_permutation(const context& from, const context& to) {
  auto sorted = [](const context& c) {
    auto v = c.vars;
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted(from) != sorted(to))
    throw std::logic_error("context_permutation: contexts are not a reordering");

  const long nbits = from.count(qtype::bit_t);
  const long nq = from.count(qtype::qbit_t);
  const long nnat = from.count(qtype::nat_t);

  // For each variable: its typed position in `from` and in `to`.
  std::vector<std::pair<long, long>> bitmap, wiremap, natmap;  // (from_pos, to_pos)
  for (long i = 0; i < static_cast<long>(from.vars.size()); ++i) {
    long j = to.find(from.vars[i].first);
    long fp = from.typed_pos(i), tp = to.typed_pos(j);
    switch (from.vars[i].second) {
      case qtype::bit_t: bitmap.emplace_back(fp, tp); break;
      case qtype::qbit_t: wiremap.emplace_back(fp, tp); break;
      case qtype::nat_t: natmap.emplace_back(fp, tp); break;
    }
  }

  cmat u = cidentity(1L << nq);
  if (nq > 0) {
    u = czero(1L << nq, 1L << nq);
    for (long b = 0; b < (1L << nq); ++b) {
      long b2 = 0;
      for (const auto& [fp, tp] : wiremap)
        b2 = detail::set_digit(b2, tp, nq, detail::get_digit(b, fp, nq));
      u(b2, b) = 1.0;
    }
  }
  auto ulift = block_map::from_kraus(1L << nq, 1L << nq, {u});

  auto bm = bitmap;
  auto nm = natmap;
  return qarrow::from_columns(from.sig(), to.sig(),
                              [bm, nm, nbits, nnat, ulift](const block_loc& j) -> col_t {
                                long c2 = 0;
                                for (const auto& [fp, tp] : bm)
                                  c2 = detail::set_digit(c2, tp, nbits,
                                                         detail::get_digit(j.comp, fp, nbits));
                                std::vector<long> nat2(nnat, 0);
                                for (const auto& [fp, tp] : nm) nat2[tp] = j.nat[fp];
                                return {{{c2, std::move(nat2)}, ulift}};
                              });
}

struct denotation {
  context input;
  context output;
  qarrow arr;
  std::shared_ptr<trace_stats> stats;
};

namespace detail {

struct walker {
  const gate_table& gates;
  const std::map<std::string, nat_builtin>& builtins;
  const std::map<std::string, const proc_def*>& proc_sigs;
  const std::map<std::string, qarrow>* proc_arrows = nullptr;  // null ⇒ typecheck only
  fix_options fopts{};
  std::shared_ptr<trace_stats> stats{};
  std::set<std::string>* called = nullptr;  // records call edges during typecheck

  bool denoting() const { return proc_arrows != nullptr; }

  struct result {
    context ctx;
    qarrow arr;
  };

  [[noreturn]] static void fail(src_pos pos, const std::string& msg) { throw type_error(msg, pos); }

  static long require_var(const context& ctx, const std::string& name, src_pos pos) {
    long i = ctx.find(name);
    if (i < 0) fail(pos, "unknown variable '" + name + "'");
    return i;
  }

  result block_walk(const block& b, context ctx) {
    qarrow acc;
    if (denoting()) acc = identity(ctx.sig());
    for (const stmt& s : b.stmts) {
      result r = stmt_walk(s, std::move(ctx));
      ctx = std::move(r.ctx);
      if (denoting()) acc = compose(r.arr, acc);
    }
    return {std::move(ctx), std::move(acc)};
  }

  result stmt_walk(const stmt& s, context ctx) {
    return std::visit([&](const auto& node) { return handle(node, std::move(ctx), s.pos); },
                      s.node);
  }

  // --- clauses ---

  result handle(const skip_stmt&, context ctx, src_pos) {
    qarrow a;
    if (denoting()) a = identity(ctx.sig());
    return {std::move(ctx), std::move(a)};
  }

  result handle(const new_stmt& n, context ctx, src_pos pos) {
    if (ctx.find(n.var) >= 0) fail(pos, "variable '" + n.var + "' is already declared");
    context ctx2 = ctx;
    ctx2.vars.emplace_back(n.var, n.type);
    qarrow a;
    if (denoting()) {
      const long dim = 1L << ctx.count(qtype::qbit_t);
      switch (n.type) {
        case qtype::bit_t:
          a = qarrow::from_columns(ctx.sig(), ctx2.sig(), [dim](const block_loc& j) -> col_t {
            return {{{j.comp << 1, j.nat}, block_map::identity(dim)}};
          });
          break;
        case qtype::qbit_t: {
          cmat e0 = czero(2, 1);
          e0(0, 0) = 1.0;
          auto born = block_map::from_kraus(dim, dim * 2, {kron(cidentity(dim), e0)});
          a = qarrow::from_columns(ctx.sig(), ctx2.sig(), [born](const block_loc& j) -> col_t {
            return {{j, born}};
          });
          break;
        }
        case qtype::nat_t:
          a = qarrow::from_columns(ctx.sig(), ctx2.sig(), [dim](const block_loc& j) -> col_t {
            std::vector<long> nat = j.nat;
            nat.push_back(0);
            return {{{j.comp, std::move(nat)}, block_map::identity(dim)}};
          });
          break;
      }
    }
    return {std::move(ctx2), std::move(a)};
  }

  result handle(const discard_stmt& d, context ctx, src_pos pos) {
    long i = require_var(ctx, d.var, pos);
    long p = ctx.typed_pos(i);
    qtype t = ctx.vars[i].second;
    context ctx2 = ctx;
    ctx2.vars.erase(ctx2.vars.begin() + i);
    qarrow a;
    if (denoting()) {
      const long nbits = ctx.count(qtype::bit_t);
      const long nq = ctx.count(qtype::qbit_t);
      const long dim = 1L << nq;
      switch (t) {
        case qtype::bit_t:
          a = qarrow::from_columns(ctx.sig(), ctx2.sig(), [p, nbits, dim](const block_loc& j) -> col_t {
            return {{{remove_digit(j.comp, p, nbits), j.nat}, block_map::identity(dim)}};
          });
          break;
        case qtype::qbit_t: {
          auto tr = block_map::from_kraus(dim, dim / 2, {wire_bra(p, 0, nq), wire_bra(p, 1, nq)});
          a = qarrow::from_columns(ctx.sig(), ctx2.sig(), [tr](const block_loc& j) -> col_t {
            return {{j, tr}};
          });
          break;
        }
        case qtype::nat_t:
          a = qarrow::from_columns(ctx.sig(), ctx2.sig(), [p, dim](const block_loc& j) -> col_t {
            std::vector<long> nat = j.nat;
            nat.erase(nat.begin() + p);
            return {{{j.comp, std::move(nat)}, block_map::identity(dim)}};
          });
          break;
      }
    }
    return {std::move(ctx2), std::move(a)};
  }

  result handle(const assign_literal_stmt& s, context ctx, src_pos pos) {
    long i = require_var(ctx, s.var, pos);
    long p = ctx.typed_pos(i);
    qtype t = ctx.vars[i].second;
    if (t == qtype::qbit_t) fail(pos, "cannot assign a literal to qbit '" + s.var + "'");
    if (t == qtype::bit_t && s.value != 0 && s.value != 1)
      fail(pos, "bit literal must be 0 or 1");
    qarrow a;
    if (denoting()) {
      const long nbits = ctx.count(qtype::bit_t);
      const long dim = 1L << ctx.count(qtype::qbit_t);
      const long v = s.value;
      if (t == qtype::bit_t)
        a = qarrow::from_columns(ctx.sig(), ctx.sig(), [p, nbits, dim, v](const block_loc& j) -> col_t {
          return {{{set_digit(j.comp, p, nbits, v), j.nat}, block_map::identity(dim)}};
        });
      else
        a = qarrow::from_columns(ctx.sig(), ctx.sig(), [p, dim, v](const block_loc& j) -> col_t {
          std::vector<long> nat = j.nat;
          nat[p] = v;
          return {{{j.comp, std::move(nat)}, block_map::identity(dim)}};
        });
    }
    return {std::move(ctx), std::move(a)};
  }

  result handle(const assign_fn_stmt& s, context ctx, src_pos pos) {
    long i = require_var(ctx, s.var, pos);
    if (ctx.vars[i].second != qtype::nat_t)
      fail(pos, "'" + s.var + "' must have type nat to receive a function value");
    auto it = builtins.find(s.fn);
    if (it == builtins.end()) fail(pos, "unknown function '" + s.fn + "'");
    if (static_cast<long>(s.args.size()) != it->second.arity)
      fail(pos, "function '" + s.fn + "' expects " + std::to_string(it->second.arity) +
                    " argument(s), got " + std::to_string(s.args.size()));
    std::vector<long> argpos;
    for (const auto& aname : s.args) {
      long ai = require_var(ctx, aname, pos);
      if (ctx.vars[ai].second != qtype::nat_t)
        fail(pos, "function argument '" + aname + "' must have type nat");
      argpos.push_back(ctx.typed_pos(ai));
    }
    qarrow a;
    if (denoting()) {
      const long p = ctx.typed_pos(i);
      const long dim = 1L << ctx.count(qtype::qbit_t);
      auto fn = it->second.fn;
      a = qarrow::from_columns(ctx.sig(), ctx.sig(),
                               [p, dim, fn, argpos](const block_loc& j) -> col_t {
                                 std::vector<long> vals;
                                 for (long ap : argpos) vals.push_back(j.nat[ap]);
                                 std::vector<long> nat = j.nat;
                                 nat[p] = fn(vals);
                                 return {{{j.comp, std::move(nat)}, block_map::identity(dim)}};
                               });
    }
    return {std::move(ctx), std::move(a)};
  }

  result handle(const gate_stmt& g, context ctx, src_pos pos) {
    auto it = gates.find(g.gate);
    if (it == gates.end()) fail(pos, "unknown gate '" + g.gate + "'");
    if (g.lhs != g.wires.front())
      fail(pos, "the left-hand side of a gate application must be its first wire argument");
    if (static_cast<long>(g.wires.size()) != it->second.wires)
      fail(pos, "gate '" + g.gate + "' acts on " + std::to_string(it->second.wires) +
                    " wire(s), got " + std::to_string(g.wires.size()));
    std::vector<long> pos_of;
    std::set<std::string> seen;
    for (const auto& w : g.wires) {
      if (!seen.insert(w).second) fail(pos, "duplicate wire '" + w + "' in gate application");
      long wi = require_var(ctx, w, pos);
      if (ctx.vars[wi].second != qtype::qbit_t) fail(pos, "wire '" + w + "' must have type qbit");
      pos_of.push_back(ctx.typed_pos(wi));
    }
    qarrow a;
    if (denoting()) {
      const long nq = ctx.count(qtype::qbit_t);
      auto lift = block_map::from_kraus(1L << nq, 1L << nq, {gate_embed(it->second.u, pos_of, nq)});
      a = qarrow::from_columns(ctx.sig(), ctx.sig(), [lift](const block_loc& j) -> col_t {
        return {{j, lift}};
      });
    }
    return {std::move(ctx), std::move(a)};
  }

  result handle(const measure_stmt& m, context ctx, src_pos pos) {
    long i = require_var(ctx, m.var, pos);
    if (ctx.vars[i].second != qtype::qbit_t)
      fail(pos, "measured variable '" + m.var + "' must have type qbit");
    const long w = ctx.typed_pos(i);
    const long nq = ctx.count(qtype::qbit_t);
    const long nbits = ctx.count(qtype::bit_t);
    context mid = ctx;
    mid.vars[i].second = qtype::bit_t;
    const long p = mid.typed_pos(i);

    result one = block_walk(m.on_one, mid);
    result zero = block_walk(m.on_zero, mid);
    if (!(one.ctx == zero.ctx))
      fail(pos, "measurement branches end in different contexts: " + one.ctx.str() + " vs " +
                    zero.ctx.str());
    qarrow a;
    if (denoting()) {
      auto meas_arrow = [&](long b) {
        auto bra = block_map::from_kraus(1L << nq, 1L << (nq - 1), {wire_bra(w, b, nq)});
        return qarrow::from_columns(ctx.sig(), mid.sig(),
                                    [p, nbits, b, bra](const block_loc& j) -> col_t {
                                      return {{{insert_digit(j.comp, p, nbits, b), j.nat}, bra}};
                                    });
      };
      a = arrow_sum(compose(one.arr, meas_arrow(1)), compose(zero.arr, meas_arrow(0)));
    }
    return {std::move(one.ctx), std::move(a)};
  }

  result handle(const if_stmt& s, context ctx, src_pos pos) {
    long i = require_var(ctx, s.var, pos);
    if (ctx.vars[i].second != qtype::bit_t)
      fail(pos, "condition '" + s.var + "' must have type bit");
    const long p = ctx.typed_pos(i);
    const long nbits = ctx.count(qtype::bit_t);
    const long dim = 1L << ctx.count(qtype::qbit_t);

    result one = block_walk(s.on_one, ctx);
    result zero = block_walk(s.on_zero, ctx);
    if (!(one.ctx == zero.ctx))
      fail(pos, "conditional branches end in different contexts: " + one.ctx.str() + " vs " +
                    zero.ctx.str());
    qarrow a;
    if (denoting()) {
      auto proj = [&](long b) {
        return qarrow::from_columns(ctx.sig(), ctx.sig(),
                                    [p, nbits, b, dim](const block_loc& j) -> col_t {
                                      if (get_digit(j.comp, p, nbits) != b) return {};
                                      return {{j, block_map::identity(dim)}};
                                    });
      };
      a = arrow_sum(compose(one.arr, proj(1)), compose(zero.arr, proj(0)));
    }
    return {std::move(one.ctx), std::move(a)};
  }

  result handle(const while_stmt& s, context ctx, src_pos pos) {
    long i = require_var(ctx, s.var, pos);
    if (ctx.vars[i].second != qtype::bit_t)
      fail(pos, "loop condition '" + s.var + "' must have type bit");
    const long p = ctx.typed_pos(i);
    const long nbits = ctx.count(qtype::bit_t);
    const long dim = 1L << ctx.count(qtype::qbit_t);

    result body = block_walk(s.body, ctx);
    if (!(body.ctx == ctx))
      fail(pos, "loop body must preserve its context: " + ctx.str() + " became " +
                    body.ctx.str());
    qarrow a;
    if (denoting()) {
      signature one = ctx.sig();
      signature both = direct_sum(one, one);
      const long nc = one.comp_count();
      qarrow barr = body.arr;
      // Exit summand first: condition 0 leaves, condition 1 runs the body
      // and feeds back.
      qarrow loop = qarrow::from_columns(both, both,
                                         [p, nbits, dim, nc, barr](const block_loc& j) -> col_t {
                                           long c = j.comp < nc ? j.comp : j.comp - nc;
                                           if (get_digit(c, p, nbits) == 0)
                                             return {{{c, j.nat}, block_map::identity(dim)}};
                                           col_t out;
                                           for (const auto& [r, m] : barr.column({c, j.nat}))
                                             out.emplace_back(block_loc{r.comp + nc, r.nat}, m);
                                           return out;
                                         });
      a = trace(loop, nc, nc, fopts, stats);
    }
    return {std::move(ctx), std::move(a)};
  }

  result handle(const call_stmt& s, context ctx, src_pos pos) {
    auto it = proc_sigs.find(s.proc);
    if (it == proc_sigs.end()) fail(pos, "unknown procedure '" + s.proc + "'");
    const proc_def& def = *it->second;
    if (called) called->insert(s.proc);
    if (s.args.size() != def.params.size())
      fail(pos, "procedure '" + s.proc + "' expects " + std::to_string(def.params.size()) +
                    " argument(s), got " + std::to_string(s.args.size()));
    std::set<std::string> seen;
    for (size_t k = 0; k < s.args.size(); ++k) {
      if (!seen.insert(s.args[k]).second)
        fail(pos, "duplicate argument '" + s.args[k] + "' in procedure call");
      long ai = require_var(ctx, s.args[k], pos);
      if (ctx.vars[ai].second != def.params[k].type)
        fail(pos, "argument '" + s.args[k] + "' has type " +
                      type_name(ctx.vars[ai].second) + ", procedure expects " +
                      type_name(def.params[k].type));
    }
    qarrow a;
    if (denoting()) {
      auto ha = proc_arrows->find(s.proc);
      if (ha == proc_arrows->end())
        throw std::logic_error("denotation order violated for procedure " + s.proc);
      // Reorder so the arguments sit last, in parameter order; there the
      // context factors as rest ⊗ args and the body acts on the right factor.
      context rest;
      for (const auto& v : ctx.vars)
        if (std::find(s.args.begin(), s.args.end(), v.first) == s.args.end())
          rest.vars.push_back(v);
      context packed = rest;
      for (size_t k = 0; k < s.args.size(); ++k)
        packed.vars.emplace_back(s.args[k], def.params[k].type);
      qarrow to = context_permutation(ctx, packed);
      qarrow back = context_permutation(packed, ctx);
      a = compose(back, compose(tensor_arrow(identity(rest.sig()), ha->second), to));
    }
    return {std::move(ctx), std::move(a)};
  }
};

}  // namespace detail

class front_end {
 public:
  explicit front_end(gate_table gates = standard_gates(),
                     std::map<std::string, nat_builtin> builtins = standard_nat_builtins())
      : gates_(std::move(gates)), builtins_(std::move(builtins)) {}

  const gate_table& gates() const { return gates_; }
  gate_table& gates() { return gates_; }

  // Typecheck everything; returns the exit context of the main program.
  context typecheck(const program& prog, const context& input) const {
    std::map<std::string, const proc_def*> sigs;
    std::map<std::string, std::set<std::string>> edges;
    return check_impl(prog, input, sigs, edges);
  }

  denotation denote(const program& prog, const context& input, fix_options fopts = {}) const {
    std::map<std::string, const proc_def*> sigs;
    std::map<std::string, std::set<std::string>> edges;
    check_impl(prog, input, sigs, edges);

    auto stats = std::make_shared<trace_stats>();
    std::map<std::string, qarrow> proc_arrows;

    for (const auto& component : sccs_in_dependency_order(prog, edges)) {
      if (!is_recursive(component, edges)) {
        const proc_def& def = *sigs.at(component[0]);
        detail::walker w{gates_, builtins_, sigs, &proc_arrows, fopts, stats, nullptr};
        proc_arrows.emplace(component[0], w.block_walk(def.body, param_context(def)).arr);
        continue;
      }
      std::map<std::string, qarrow> h;
      for (const auto& name : component) {
        signature s = param_context(*sigs.at(name)).sig();
        h.emplace(name, zero_arrow(s, s));
      }
      bool converged = false;
      long n = 0;
      while (n < fopts.max_iter) {
        ++n;
        std::map<std::string, qarrow> table = proc_arrows;
        for (const auto& [name, arr] : h) table.insert_or_assign(name, arr);
        double delta = 0;
        std::map<std::string, qarrow> h2;
        for (const auto& name : component) {
          const proc_def& def = *sigs.at(name);
          detail::walker w{gates_, builtins_, sigs, &table, fopts, stats, nullptr};
          qarrow next = compress_arrow(w.block_walk(def.body, param_context(def)).arr, fopts.tol);
          if (!cp_leq_arrow(h.at(name), next, fopts.tol))
            throw std::logic_error("recursion: iteration chain is not ascending in the CP order");
          delta = std::max(delta, arrow_entry_dist(h.at(name), next));
          h2.insert_or_assign(name, std::move(next));
        }
        h = std::move(h2);
        if (delta <= fopts.tol.eps_fix) {
          converged = true;
          break;
        }
      }
      stats->converged = stats->converged && converged;
      stats->iterations = std::max(stats->iterations, n);
      for (auto& [name, arr] : h) proc_arrows.insert_or_assign(name, std::move(arr));
    }

    detail::walker w{gates_, builtins_, sigs, &proc_arrows, fopts, stats, nullptr};
    auto r = w.block_walk(prog.main, input);
    denotation d{input, std::move(r.ctx), std::move(r.arr), stats};
    if (!d.arr.finite()) return d;
    d.arr.set_meta({stats->converged, stats->iterations});
    return d;
  }

 private:
  static context param_context(const proc_def& def) {
    context c;
    for (const auto& p : def.params) c.vars.emplace_back(p.name, p.type);
    return c;
  }

  context check_impl(const program& prog, const context& input,
                     std::map<std::string, const proc_def*>& sigs,
                     std::map<std::string, std::set<std::string>>& edges) const {
    for (const auto& def : prog.procs) {
      if (!sigs.emplace(def.name, &def).second)
        throw type_error("procedure '" + def.name + "' is defined twice", def.pos);
      std::set<std::string> names;
      for (const auto& p : def.params)
        if (!names.insert(p.name).second)
          throw type_error("duplicate parameter '" + p.name + "' in procedure '" + def.name + "'",
                           def.pos);
    }
    for (const auto& def : prog.procs) {
      detail::walker w{gates_, builtins_, sigs, nullptr, {}, nullptr, &edges[def.name]};
      context out = w.block_walk(def.body, param_context(def)).ctx;
      if (!(out == param_context(def)))
        throw type_error("procedure '" + def.name + "' must end with its parameter context (" +
                             param_context(def).str() + "), got " + out.str(),
                         def.pos);
    }
    // Recursion is resolved by an ascending iteration over finite signatures,
    // so no procedure in a call-graph cycle may take a nat parameter.
    for (const auto& component : sccs_in_dependency_order(prog, edges))
      if (is_recursive(component, edges))
        for (const auto& name : component)
          for (const auto& p : sigs.at(name)->params)
            if (p.type == qtype::nat_t)
              throw type_error("recursive procedure '" + name + "' cannot take nat parameters",
                               sigs.at(name)->pos);
    std::set<std::string> main_calls;
    detail::walker w{gates_, builtins_, sigs, nullptr, {}, nullptr, &main_calls};
    return w.block_walk(prog.main, input).ctx;
  }

  static bool is_recursive(const std::vector<std::string>& component,
                           const std::map<std::string, std::set<std::string>>& edges) {
    if (component.size() > 1) return true;
    auto it = edges.find(component[0]);
    return it != edges.end() && it->second.count(component[0]) > 0;
  }

  // Strongly connected components of the call graph, callees before callers.
  static std::vector<std::vector<std::string>> sccs_in_dependency_order(
      const program& prog, const std::map<std::string, std::set<std::string>>& edges) {
    std::vector<std::string> order;
    std::map<std::string, long> index, low;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    std::vector<std::vector<std::string>> out;
    long counter = 0;

    std::function<void(const std::string&)> strongconnect = [&](const std::string& v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack.insert(v);
      auto it = edges.find(v);
      if (it != edges.end())
        for (const auto& t : it->second) {
          if (!index.count(t)) {
            strongconnect(t);
            low[v] = std::min(low[v], low[t]);
          } else if (on_stack.count(t)) {
            low[v] = std::min(low[v], index[t]);
          }
        }
      if (low[v] == index[v]) {
        std::vector<std::string> comp;
        for (;;) {
          std::string w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          comp.push_back(w);
          if (w == v) break;
        }
        out.push_back(std::move(comp));
      }
    };
    for (const auto& def : prog.procs)
      if (!index.count(def.name)) strongconnect(def.name);
    return out;
  }

  gate_table gates_;
  std::map<std::string, nat_builtin> builtins_;
};

}  // namespace qflow
