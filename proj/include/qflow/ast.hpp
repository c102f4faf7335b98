#pragma once

// Abstract syntax of the little imperative quantum language.
//
//   program  := {procdef} {stmt}
//   procdef  := "proc" ident "(" [param {"," param}] ")" block
//   param    := ident ":" type
//   type     := "bit" | "qbit" | "nat"
//   block    := "{" {stmt} "}"
//   stmt     := "skip" ";"
//             | "new" type ident ";"
//             | "discard" ident ";"
//             | ident ":=" number ";"
//             | ident ":=" ident "(" [ident {"," ident}] ")" ";"
//             | ident "*=" ident "(" ident {"," ident} ")" ";"
//             | "measure" ident "then" block "else" block
//             | "if" ident "then" block "else" block
//             | "while" ident "do" block
//             | "call" ident "(" [ident {"," ident}] ")" ";"
//   Trailing semicolons after blocks are tolerated.  The then-branch of
//   measure and if runs on outcome/value 1.  In a gate application the
//   left-hand side must be the first wire argument.

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace qflow {

struct src_pos {
  long line = 0;
  long col = 0;
};

enum class qtype { bit_t, qbit_t, nat_t };

inline const char* type_name(qtype t) {
  switch (t) {
    case qtype::bit_t: return "bit";
    case qtype::qbit_t: return "qbit";
    default: return "nat";
  }
}

struct stmt;

struct block {
  std::vector<stmt> stmts;
};

struct skip_stmt {};
struct new_stmt {
  qtype type;
  std::string var;
};
struct discard_stmt {
  std::string var;
};
struct assign_literal_stmt {
  std::string var;
  long value = 0;
};
struct assign_fn_stmt {
  std::string var;
  std::string fn;
  std::vector<std::string> args;
};
struct gate_stmt {
  std::string lhs;
  std::string gate;
  std::vector<std::string> wires;
};
struct measure_stmt {
  std::string var;
  block on_one;   // outcome 1
  block on_zero;  // outcome 0
};
struct if_stmt {
  std::string var;
  block on_one;
  block on_zero;
};
struct while_stmt {
  std::string var;
  block body;
};
struct call_stmt {
  std::string proc;
  std::vector<std::string> args;
};

using stmt_node = std::variant<skip_stmt, new_stmt, discard_stmt, assign_literal_stmt,
                               assign_fn_stmt, gate_stmt, measure_stmt, if_stmt, while_stmt,
                               call_stmt>;

struct stmt {
  stmt_node node;
  src_pos pos;
};

struct param {
  std::string name;
  qtype type;
};

struct proc_def {
  std::string name;
  std::vector<param> params;
  block body;
  src_pos pos;
};

struct program {
  std::vector<proc_def> procs;
  block main;
};

}  // namespace qflow
