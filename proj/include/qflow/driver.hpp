#pragma once

// Command implementations behind the command-line tool: run, check, dump,
// and demo.  Kept out of main() so tests can drive them on string sources
// and inspect exit codes and output without spawning processes.

#include <qflow/serialize.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>

namespace qflow {

constexpr int exit_ok = 0;
constexpr int exit_parse_error = 2;
constexpr int exit_type_error = 3;
constexpr int exit_numeric_error = 4;

struct driver_options {
  std::string context_str;  // typed entry context, e.g. "q:qbit, n:nat"
  std::string state_str;    // entry state, e.g. "q=+, n=3"; defaults are zero
  json gates;               // extra gate definitions, {"NAME": [[..row..], ..]}
  double tol = -1;          // < 0 keeps the library defaults
  long max_iter = -1;       // < 0 keeps the library default
  bool json_out = false;
};

inline fix_options make_fix_options(const driver_options& o) {
  fix_options f;
  if (o.tol > 0) {
    f.tol.eps_psd = f.tol.eps_eq = o.tol;
    f.tol.eps_fix = o.tol / 10;
  }
  if (o.max_iter > 0) f.max_iter = o.max_iter;
  return f;
}

inline void load_gates(gate_table& table, const json& defs, const tolerance& tol = {}) {
  if (defs.is_null()) return;
  if (!defs.is_object()) throw std::invalid_argument("gate definitions must be an object");
  for (const auto& [name, mat] : defs.items())
    register_gate(table, name, cmat_from_json(mat), tol);
}

// Entry states are comma-separated "name=value" pairs over the entry
// context: bits take 0/1, nats a number, qbits one of the kets
// 0, 1, +, -, i, -i.  Unmentioned variables start at 0 (qbits in the 0 ket).
inline state_vector parse_state(const context& ctx, const std::string& spec) {
  std::map<std::string, std::string> given;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    item = strip(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("state: expected name=value, got '" + item + "'");
    std::string name = strip(item.substr(0, eq)), val = strip(item.substr(eq + 1));
    if (ctx.find(name) < 0)
      throw std::invalid_argument("state: '" + name + "' is not in the entry context");
    if (!given.emplace(name, val).second)
      throw std::invalid_argument("state: '" + name + "' is set twice");
  }

  static const std::map<std::string, std::pair<cplx, cplx>> kets = {
      {"0", {1, 0}},
      {"1", {0, 1}},
      {"+", {1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2}},
      {"-", {1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2}},
      {"i", {1.0 / std::numbers::sqrt2, cplx(0, 1.0 / std::numbers::sqrt2)}},
      {"-i", {1.0 / std::numbers::sqrt2, cplx(0, -1.0 / std::numbers::sqrt2)}}};

  const long nbits = ctx.count(qtype::bit_t);
  long comp = 0;
  std::vector<long> nat(ctx.count(qtype::nat_t), 0);
  cvec psi = cvec::Ones(1);
  for (long i = 0; i < static_cast<long>(ctx.vars.size()); ++i) {
    const auto& [name, t] = ctx.vars[i];
    long p = ctx.typed_pos(i);
    auto it = given.find(name);
    const std::string val = it == given.end() ? "0" : it->second;
    switch (t) {
      case qtype::bit_t: {
        if (val != "0" && val != "1")
          throw std::invalid_argument("state: bit '" + name + "' must be 0 or 1");
        comp = detail::set_digit(comp, p, nbits, val == "1" ? 1 : 0);
        break;
      }
      case qtype::nat_t: {
        size_t used = 0;
        long v = -1;
        try {
          v = std::stol(val, &used);
        } catch (const std::exception&) {
        }
        if (used != val.size() || v < 0)
          throw std::invalid_argument("state: nat '" + name + "' must be a number, got '" + val +
                                      "'");
        nat[p] = v;
        break;
      }
      case qtype::qbit_t: {
        auto k = kets.find(val);
        if (k == kets.end())
          throw std::invalid_argument("state: qbit '" + name +
                                      "' must be one of 0, 1, +, -, i, -i");
        cvec w(2);
        w << k->second.first, k->second.second;
        cvec next(psi.size() * 2);
        for (long a = 0; a < psi.size(); ++a)
          for (long b = 0; b < 2; ++b) next(a * 2 + b) = psi(a) * w(b);
        psi = std::move(next);
        break;
      }
    }
  }
  return state_vector::of_block(ctx.sig(), {comp, std::move(nat)}, psi * psi.adjoint());
}

inline run_report make_report(const std::string& name, const denotation& den,
                              const state_vector& out, const tolerance& tol) {
  run_report r;
  r.program = name;
  r.input_context = den.input.str();
  r.output_context = den.output.str();
  r.output_signature = den.output.sig().str();
  r.total_mass = out.total_trace();
  r.converged = den.stats ? den.stats->converged : true;
  r.iterations = den.stats ? den.stats->iterations : 0;
  r.outcomes = outcomes_of(out, den.output);
  r.tol = tol;
  return r;
}

inline void print_report(const run_report& r, std::ostream& os) {
  os << "program:   " << r.program << "\n";
  os << "input:     " << r.input_context << "\n";
  os << "output:    " << r.output_context << "\n";
  os << "signature: " << r.output_signature << "\n";
  os << "mass:      " << std::setprecision(12) << r.total_mass;
  if (r.converged)
    os << "  (converged, " << r.iterations << " iterations)\n";
  else
    os << "  (NOT converged after " << r.iterations << " iterations; mass is a lower bound)\n";
  os << "outcomes:\n";
  if (r.outcomes.empty()) os << "  (none above threshold)\n";
  const size_t shown = std::min<size_t>(r.outcomes.size(), 20);
  for (size_t k = 0; k < shown; ++k) {
    const auto& o = r.outcomes[k];
    std::string label;
    for (const auto& [n, v] : o.bits) label += n + "=" + std::to_string(v) + " ";
    for (const auto& [n, v] : o.nats) label += n + "=" + std::to_string(v) + " ";
    if (label.empty()) label = "component " + std::to_string(o.component) + " ";
    os << "  " << std::left << std::setw(24) << label << std::setprecision(12) << o.weight
       << "\n";
  }
  if (shown < r.outcomes.size())
    os << "  ... (" << r.outcomes.size() - shown << " more below "
       << std::setprecision(3) << r.outcomes[shown].weight << ")\n";
}

inline int run_source(const std::string& name, const std::string& source,
                      const driver_options& opts, std::ostream& out, std::ostream& err) {
  fix_options fopts = make_fix_options(opts);
  try {
    program prog = parse(source);
    front_end fe;
    load_gates(fe.gates(), opts.gates, fopts.tol);
    context input = parse_context(opts.context_str);
    denotation den = fe.denote(prog, input, fopts);
    state_vector in_state = parse_state(input, opts.state_str);
    in_state.validate(fopts.tol);
    state_vector out_state = apply(den.arr, in_state);
    run_report r = make_report(name, den, out_state, fopts.tol);
    if (opts.json_out)
      out << to_json(r).dump(2) << "\n";
    else
      print_report(r, out);
    return exit_ok;
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << "\n";
    return exit_parse_error;
  } catch (const type_error& e) {
    err << "type error: " << e.what() << "\n";
    return exit_type_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric_error;
  }
}

inline int check_source(const std::string& name, const std::string& source,
                        const driver_options& opts, std::ostream& out, std::ostream& err) {
  try {
    program prog = parse(source);
    front_end fe;
    load_gates(fe.gates(), opts.gates);
    context input = parse_context(opts.context_str);
    context output = fe.typecheck(prog, input);
    if (opts.json_out) {
      json j = {{"program", name},
                {"input_context", input.str()},
                {"output_context", output.str()},
                {"input_signature", input.sig().str()},
                {"output_signature", output.sig().str()},
                {"procedures", prog.procs.size()}};
      out << j.dump(2) << "\n";
    } else {
      out << name << ": well-typed\n";
      out << "  input:  " << input.str() << "   ~ " << input.sig().str() << "\n";
      out << "  output: " << output.str() << "   ~ " << output.sig().str() << "\n";
    }
    return exit_ok;
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << "\n";
    return exit_parse_error;
  } catch (const type_error& e) {
    err << "type error: " << e.what() << "\n";
    return exit_type_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric_error;
  }
}

inline int dump_source(const std::string& name, const std::string& source,
                       const driver_options& opts, std::ostream& out, std::ostream& err) {
  fix_options fopts = make_fix_options(opts);
  try {
    program prog = parse(source);
    front_end fe;
    load_gates(fe.gates(), opts.gates, fopts.tol);
    context input = parse_context(opts.context_str);
    denotation den = fe.denote(prog, input, fopts);
    if (!den.arr.finite()) {
      err << "error: '" << name
          << "' involves nat variables; only arrows between finite signatures can be dumped\n";
      return exit_numeric_error;
    }
    json j = to_json(den.arr);
    j["program"] = name;
    j["input_context"] = den.input.str();
    j["output_context"] = den.output.str();
    out << j.dump(2) << "\n";
    return exit_ok;
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << "\n";
    return exit_parse_error;
  } catch (const type_error& e) {
    err << "type error: " << e.what() << "\n";
    return exit_type_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric_error;
  }
}

inline int demo(std::ostream& out, std::ostream& err) {
  const std::string coin = R"(
    new bit b;
    b := 1;
    while b do {
      new qbit q;
      q *= H(q);
      measure q then { b := 1 } else { b := 0 };
      discard q;
    };
  )";
  const std::string teleport = R"(
    new qbit a;
    new qbit b;
    a *= H(a);
    a *= CNOT(a, b);
    q *= CNOT(q, a);
    q *= H(q);
    measure a then { b *= X(b) } else { skip };
    measure q then { b *= Z(b) } else { skip };
    discard a;
    discard q;
  )";
  const std::string counter = R"(
    new nat n;
    new bit b;
    b := 1;
    while b do {
      n := succ(n);
      new qbit q;
      q *= H(q);
      measure q then { b := 1 } else { b := 0 };
      discard q;
    };
  )";

  out << "== a coin-flip loop terminates with probability 1 ==\n";
  driver_options o1;
  if (int rc = run_source("coin-flip loop", coin, o1, out, err); rc != exit_ok) return rc;

  out << "\n== teleportation denotes the identity channel ==\n";
  try {
    front_end fe;
    auto den = fe.denote(parse(teleport), parse_context("q:qbit"));
    double d = arrow_entry_dist(den.arr, identity(parse_context("q:qbit").sig()));
    out << "distance between the teleport arrow and the identity: " << std::scientific
        << std::setprecision(2) << d << std::defaultfloat << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric_error;
  }

  out << "\n== a counted loop leaves the geometric distribution on a nat ==\n";
  driver_options o3;
  return run_source("counted coin-flip loop", counter, o3, out, err);
}

}  // namespace qflow
