#pragma once

// Lexer and recursive-descent parser for the grammar in ast.hpp.  Every
// diagnostic carries the 1-based line and column of the offending token.

#include <qflow/ast.hpp>

#include <cctype>
#include <stdexcept>

namespace qflow {

struct parse_error : std::runtime_error {
  src_pos pos;
  parse_error(const std::string& msg, src_pos p)
      : std::runtime_error(msg + " (line " + std::to_string(p.line) + ", col " +
                           std::to_string(p.col) + ")"),
        pos(p) {}
};

namespace detail {

struct token {
  enum class kind { ident, number, punct, eof };
  kind k = kind::eof;
  std::string text;
  long value = 0;
  src_pos pos;
};

inline std::vector<token> lex(const std::string& src) {
  std::vector<token> out;
  long line = 1, col = 1;
  size_t i = 0;
  auto peek2 = [&](const char* s) {
    return i + 1 < src.size() && src[i] == s[0] && src[i + 1] == s[1];
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++col;
      ++i;
      continue;
    }
    if (peek2("//")) {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    src_pos pos{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string text;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        text.push_back(src[i]);
        ++i;
        ++col;
      }
      out.push_back({token::kind::ident, text, 0, pos});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      long v = 0;
      std::string text;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        v = v * 10 + (src[i] - '0');
        text.push_back(src[i]);
        ++i;
        ++col;
      }
      out.push_back({token::kind::number, text, v, pos});
      continue;
    }
    if (peek2(":=") || peek2("*=")) {
      out.push_back({token::kind::punct, src.substr(i, 2), 0, pos});
      i += 2;
      col += 2;
      continue;
    }
    if (std::string("{}(),;:").find(c) != std::string::npos) {
      out.push_back({token::kind::punct, std::string(1, c), 0, pos});
      ++i;
      ++col;
      continue;
    }
    throw parse_error(std::string("unexpected character '") + c + "'", pos);
  }
  out.push_back({token::kind::eof, "", 0, {line, col}});
  return out;
}

class parser {
 public:
  explicit parser(std::vector<token> toks) : toks_(std::move(toks)) {}

  program parse_program() {
    program p;
    bool main_started = false;
    while (!at_eof()) {
      if (peek_ident("proc")) {
        if (main_started)
          throw parse_error("procedure definitions must precede the main program", cur().pos);
        p.procs.push_back(parse_proc());
      } else {
        main_started = true;
        p.main.stmts.push_back(parse_stmt());
      }
    }
    return p;
  }

 private:
  const token& cur() const { return toks_[i_]; }
  bool at_eof() const { return cur().k == token::kind::eof; }
  bool peek_punct(const std::string& t) const {
    return cur().k == token::kind::punct && cur().text == t;
  }
  bool peek_ident(const std::string& t) const {
    return cur().k == token::kind::ident && cur().text == t;
  }
  token advance() { return toks_[i_++]; }
  void expect_punct(const std::string& t) {
    if (!peek_punct(t)) throw parse_error("expected '" + t + "'", cur().pos);
    ++i_;
  }
  void expect_keyword(const std::string& t) {
    if (!peek_ident(t)) throw parse_error("expected '" + t + "'", cur().pos);
    ++i_;
  }
  std::string expect_name(const char* what) {
    if (cur().k != token::kind::ident) throw parse_error(std::string("expected ") + what, cur().pos);
    return advance().text;
  }
  qtype expect_type() {
    if (peek_ident("bit")) return (++i_, qtype::bit_t);
    if (peek_ident("qbit")) return (++i_, qtype::qbit_t);
    if (peek_ident("nat")) return (++i_, qtype::nat_t);
    throw parse_error("expected a type: bit, qbit, or nat", cur().pos);
  }
  // Semicolons terminate statements but may be omitted before '}' or at the
  // end of the program; extras are harmless.
  void eat_semicolons(bool required) {
    if (required && !peek_punct(";") && !peek_punct("}") && !at_eof())
      throw parse_error("expected ';'", cur().pos);
    while (peek_punct(";")) ++i_;
  }

  std::vector<std::string> parse_name_list() {
    std::vector<std::string> names;
    expect_punct("(");
    if (!peek_punct(")")) {
      names.push_back(expect_name("a variable name"));
      while (peek_punct(",")) {
        ++i_;
        names.push_back(expect_name("a variable name"));
      }
    }
    expect_punct(")");
    return names;
  }

  proc_def parse_proc() {
    proc_def d;
    d.pos = cur().pos;
    expect_keyword("proc");
    d.name = expect_name("a procedure name");
    expect_punct("(");
    if (!peek_punct(")")) {
      for (;;) {
        param pr;
        pr.name = expect_name("a parameter name");
        expect_punct(":");
        pr.type = expect_type();
        d.params.push_back(pr);
        if (!peek_punct(",")) break;
        ++i_;
      }
    }
    expect_punct(")");
    d.body = parse_block();
    eat_semicolons(false);
    return d;
  }

  block parse_block() {
    block b;
    expect_punct("{");
    while (!peek_punct("}")) {
      if (at_eof()) throw parse_error("unterminated block", cur().pos);
      b.stmts.push_back(parse_stmt());
    }
    expect_punct("}");
    return b;
  }

  stmt parse_stmt() {
    src_pos pos = cur().pos;
    if (peek_ident("skip")) {
      ++i_;
      eat_semicolons(true);
      return {skip_stmt{}, pos};
    }
    if (peek_ident("new")) {
      ++i_;
      qtype t = expect_type();
      std::string var = expect_name("a variable name");
      eat_semicolons(true);
      return {new_stmt{t, var}, pos};
    }
    if (peek_ident("discard")) {
      ++i_;
      std::string var = expect_name("a variable name");
      eat_semicolons(true);
      return {discard_stmt{var}, pos};
    }
    if (peek_ident("measure")) {
      ++i_;
      measure_stmt m;
      m.var = expect_name("a variable name");
      expect_keyword("then");
      m.on_one = parse_block();
      expect_keyword("else");
      m.on_zero = parse_block();
      eat_semicolons(false);
      return {std::move(m), pos};
    }
    if (peek_ident("if")) {
      ++i_;
      if_stmt s;
      s.var = expect_name("a variable name");
      expect_keyword("then");
      s.on_one = parse_block();
      expect_keyword("else");
      s.on_zero = parse_block();
      eat_semicolons(false);
      return {std::move(s), pos};
    }
    if (peek_ident("while")) {
      ++i_;
      while_stmt s;
      s.var = expect_name("a variable name");
      expect_keyword("do");
      s.body = parse_block();
      eat_semicolons(false);
      return {std::move(s), pos};
    }
    if (peek_ident("call")) {
      ++i_;
      call_stmt s;
      s.proc = expect_name("a procedure name");
      s.args = parse_name_list();
      eat_semicolons(true);
      return {std::move(s), pos};
    }
    if (cur().k == token::kind::ident) {
      std::string lhs = advance().text;
      if (peek_punct(":=")) {
        ++i_;
        if (cur().k == token::kind::number) {
          long v = advance().value;
          eat_semicolons(true);
          return {assign_literal_stmt{lhs, v}, pos};
        }
        assign_fn_stmt s;
        s.var = lhs;
        s.fn = expect_name("a function name");
        s.args = parse_name_list();
        eat_semicolons(true);
        return {std::move(s), pos};
      }
      if (peek_punct("*=")) {
        ++i_;
        gate_stmt s;
        s.lhs = lhs;
        s.gate = expect_name("a gate name");
        s.wires = parse_name_list();
        if (s.wires.empty()) throw parse_error("gate application needs at least one wire", pos);
        eat_semicolons(true);
        return {std::move(s), pos};
      }
      throw parse_error("expected ':=' or '*=' after variable", cur().pos);
    }
    throw parse_error("expected a statement", pos);
  }

  std::vector<token> toks_;
  size_t i_ = 0;
};

}  // namespace detail

inline program parse(const std::string& source) {
  return detail::parser(detail::lex(source)).parse_program();
}

}  // namespace qflow
