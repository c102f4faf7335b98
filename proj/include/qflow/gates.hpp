#pragma once

// Named unitary gates available to programs.  Multi-wire gates read their
// wire arguments most-significant-first: for CNOT the first argument is the
// control.  Custom gates must be unitary with dimension a power of two.

#include <qflow/matrix.hpp>

#include <map>
#include <numbers>
#include <string>

namespace qflow {

struct gate_def {
  std::string name;
  long wires = 1;
  cmat u;
};

inline long wires_for_dim(long dim) {
  long w = 0, d = 1;
  while (d < dim) {
    d *= 2;
    ++w;
  }
  if (d != dim || w == 0) return -1;
  return w;
}

using gate_table = std::map<std::string, gate_def>;

inline void register_gate(gate_table& table, const std::string& name, const cmat& u,
                          const tolerance& tol = {}) {
  if (name.empty()) throw std::invalid_argument("register_gate: empty name");
  if (u.rows() != u.cols()) throw std::invalid_argument("register_gate: non-square matrix");
  long w = wires_for_dim(u.rows());
  if (w < 1) throw std::invalid_argument("register_gate: dimension must be 2^k, k >= 1");
  if (!approx_eq(u.adjoint() * u, cidentity(u.rows()), tol.eps_eq))
    throw std::invalid_argument("register_gate: matrix is not unitary within tolerance");
  table[name] = gate_def{name, w, u};
}

inline const gate_table& standard_gates() {
  static const gate_table table = [] {
    gate_table t;
    const cplx i(0.0, 1.0);
    const double s2 = 1.0 / std::sqrt(2.0);
    register_gate(t, "X", (cmat(2, 2) << 0, 1, 1, 0).finished());
    register_gate(t, "Y", (cmat(2, 2) << 0, -i, i, 0).finished());
    register_gate(t, "Z", (cmat(2, 2) << 1, 0, 0, -1).finished());
    register_gate(t, "H", (cmat(2, 2) << s2, s2, s2, -s2).finished());
    register_gate(t, "S", (cmat(2, 2) << 1, 0, 0, i).finished());
    register_gate(t, "T", (cmat(2, 2) << 1, 0, 0, std::exp(i * (std::numbers::pi / 4.0))).finished());
    cmat cnot = czero(4, 4);
    cnot(0, 0) = 1;
    cnot(1, 1) = 1;
    cnot(2, 3) = 1;
    cnot(3, 2) = 1;
    register_gate(t, "CNOT", cnot);
    cmat swap = czero(4, 4);
    swap(0, 0) = 1;
    swap(1, 2) = 1;
    swap(2, 1) = 1;
    swap(3, 3) = 1;
    register_gate(t, "SWAP", swap);
    cmat cz = cidentity(4);
    cz(3, 3) = -1;
    register_gate(t, "CZ", cz);
    return t;
  }();
  return table;
}

}  // namespace qflow
