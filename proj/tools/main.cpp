// Command-line interface: typecheck, run, and export programs.

#include <qflow/driver.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct cli_args {
  std::string path;
  qflow::driver_options opts;
  std::string gates_path;
};

int load_inputs(cli_args& a, std::string& name, std::string& source) {
  std::ifstream in(a.path);
  if (!in) {
    std::cerr << "error: cannot open '" << a.path << "'\n";
    return qflow::exit_numeric_error;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  source = ss.str();
  auto slash = a.path.find_last_of('/');
  name = slash == std::string::npos ? a.path : a.path.substr(slash + 1);
  if (!a.gates_path.empty()) {
    std::ifstream gf(a.gates_path);
    if (!gf) {
      std::cerr << "error: cannot open '" << a.gates_path << "'\n";
      return qflow::exit_numeric_error;
    }
    try {
      a.opts.gates = qflow::json::parse(gf);
    } catch (const std::exception& e) {
      std::cerr << "error: bad gates file: " << e.what() << "\n";
      return qflow::exit_numeric_error;
    }
  }
  return qflow::exit_ok;
}

void add_common(CLI::App* cmd, cli_args& a, bool with_state) {
  cmd->add_option("program", a.path, "program file")->required();
  cmd->add_option("-c,--context", a.opts.context_str,
                  "typed entry context, e.g. \"q:qbit, n:nat\" (default: empty)");
  cmd->add_option("-g,--gates", a.gates_path, "JSON file with extra gate matrices");
  cmd->add_flag("-j,--json", a.opts.json_out, "machine-readable output");
  if (with_state) {
    cmd->add_option("-s,--state", a.opts.state_str,
                    "entry state, e.g. \"q=+, n=3\" (default: everything 0)");
    cmd->add_option("-t,--tol", a.opts.tol, "numeric tolerance")->envname("QFLOW_TOL");
    cmd->add_option("-m,--max-iter", a.opts.max_iter, "iteration budget for loops/recursion");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-algebra semantics for a small quantum language"};
  app.require_subcommand(1);

  cli_args run_a, check_a, dump_a;
  auto* run_cmd = app.add_subcommand("run", "denote a program and run it on an entry state");
  add_common(run_cmd, run_a, true);
  auto* check_cmd = app.add_subcommand("check", "parse and typecheck a program");
  add_common(check_cmd, check_a, false);
  auto* dump_cmd = app.add_subcommand("dump", "export a program's arrow as JSON");
  add_common(dump_cmd, dump_a, true);
  auto* demo_cmd = app.add_subcommand("demo", "run a short built-in tour");

  CLI11_PARSE(app, argc, argv);

  std::string name, source;
  if (run_cmd->parsed()) {
    if (int rc = load_inputs(run_a, name, source); rc != 0) return rc;
    return qflow::run_source(name, source, run_a.opts, std::cout, std::cerr);
  }
  if (check_cmd->parsed()) {
    if (int rc = load_inputs(check_a, name, source); rc != 0) return rc;
    return qflow::check_source(name, source, check_a.opts, std::cout, std::cerr);
  }
  if (dump_cmd->parsed()) {
    if (int rc = load_inputs(dump_a, name, source); rc != 0) return rc;
    return qflow::dump_source(name, source, dump_a.opts, std::cout, std::cerr);
  }
  if (demo_cmd->parsed()) return qflow::demo(std::cout, std::cerr);
  return 1;
}
