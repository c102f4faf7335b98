#pragma once

// JSON encodings for matrices, signatures, arrows, and run reports.
// Complex numbers are written as two-element arrays [re, im]; matrices as
// row-major nested arrays of those.

#include <qflow/arrow.hpp>
#include <qflow/frontend.hpp>

#include <json.hpp>

namespace qflow {

using json = nlohmann::json;

inline json to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline cplx cplx_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const cmat& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline cmat cmat_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a matrix");
  long rows = static_cast<long>(j.size());
  long cols = static_cast<long>(j[0].size());
  cmat m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (static_cast<long>(j[r].size()) != cols)
      throw std::invalid_argument("ragged matrix rows");
    for (long c = 0; c < cols; ++c) m(r, c) = cplx_from_json(j[r][c]);
  }
  return m;
}

inline json to_json(const signature& s) {
  json comps = json::array();
  for (const auto& c : s.comps()) comps.push_back({{"rank", c.nat_rank}, {"dim", c.dim}});
  return {{"components", comps}};
}

inline signature signature_from_json(const json& j) {
  std::vector<sig_component> cs;
  for (const auto& c : j.at("components"))
    cs.push_back({c.at("rank").get<long>(), c.at("dim").get<long>()});
  return signature(cs);
}

// Finite arrows only: every block is stored by its Choi matrix, row-major
// over (target component, source component).
inline json to_json(const qarrow& f) {
  if (!f.finite()) throw std::invalid_argument("arrow serialization needs finite signatures");
  json blocks = json::array();
  for (long i = 0; i < f.target().comp_count(); ++i)
    for (long j = 0; j < f.source().comp_count(); ++j) {
      const auto& b = f.block(i, j);
      blocks.push_back({{"in", b.in_dim()}, {"out", b.out_dim()}, {"choi", to_json(b.choi())}});
    }
  return {{"source", to_json(f.source())},
          {"target", to_json(f.target())},
          {"blocks", std::move(blocks)},
          {"converged", f.meta().converged},
          {"iterations", f.meta().iterations}};
}

inline qarrow arrow_from_json(const json& j, const tolerance& tol = {}) {
  signature src = signature_from_json(j.at("source"));
  signature tgt = signature_from_json(j.at("target"));
  std::vector<block_map> blocks;
  for (const auto& b : j.at("blocks"))
    blocks.push_back(block_map::from_choi(b.at("in").get<long>(), b.at("out").get<long>(),
                                          cmat_from_json(b.at("choi"))));
  for (const auto& b : blocks)
    if (!b.is_cp(tol)) throw std::invalid_argument("arrow block is not completely positive");
  arrow_meta meta{j.value("converged", true), j.value("iterations", 0L)};
  return qarrow::from_dense(src, tgt, std::move(blocks), meta);
}

// One row of a run report: a block of the output state with its variable
// readout and probability weight.
struct outcome_entry {
  std::vector<std::pair<std::string, long>> bits;  // bit variables, context order
  std::vector<std::pair<std::string, long>> nats;  // nat variables, context order
  long component = 0;
  double weight = 0;
};

struct run_report {
  std::string program;
  std::string input_context;
  std::string output_context;
  std::string output_signature;
  double total_mass = 0;
  bool converged = true;
  long iterations = 0;
  std::vector<outcome_entry> outcomes;
  tolerance tol;
};

inline json to_json(const run_report& r) {
  json outs = json::array();
  for (const auto& o : r.outcomes) {
    json bits = json::object(), nats = json::object();
    for (const auto& [n, v] : o.bits) bits[n] = v;
    for (const auto& [n, v] : o.nats) nats[n] = v;
    outs.push_back({{"component", o.component},
                    {"bits", std::move(bits)},
                    {"nats", std::move(nats)},
                    {"weight", o.weight}});
  }
  return {{"program", r.program},
          {"input_context", r.input_context},
          {"output_context", r.output_context},
          {"output_signature", r.output_signature},
          {"total_mass", r.total_mass},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"outcomes", std::move(outs)},
          {"tolerances",
           {{"eps_psd", r.tol.eps_psd}, {"eps_eq", r.tol.eps_eq}, {"eps_fix", r.tol.eps_fix}}}};
}

// Decode the output state of a program run into report rows, heaviest first.
inline std::vector<outcome_entry> outcomes_of(const state_vector& out, const context& ctx,
                                              double threshold = 1e-12) {
  const long nbits = ctx.count(qtype::bit_t);
  std::vector<outcome_entry> entries;
  for (const auto& [loc, m] : out.parts) {
    double w = m.trace().real();
    if (w <= threshold) continue;
    outcome_entry e;
    e.component = loc.comp;
    e.weight = w;
    for (long i = 0; i < static_cast<long>(ctx.vars.size()); ++i) {
      const auto& [name, t] = ctx.vars[i];
      long p = ctx.typed_pos(i);
      if (t == qtype::bit_t) e.bits.emplace_back(name, detail::get_digit(loc.comp, p, nbits));
      if (t == qtype::nat_t) e.nats.emplace_back(name, loc.nat[p]);
    }
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const outcome_entry& a, const outcome_entry& b) { return a.weight > b.weight; });
  return entries;
}

}  // namespace qflow
