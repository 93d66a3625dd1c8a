#include <iostream>

#include "CLI11.hpp"
#include "mungo/harness.hpp"
#include "mungo/monitor.hpp"
#include "mungo/usage.hpp"

using namespace mungo;

namespace {

int load(const std::string& path, std::string& src) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << path << ": error[IOError]: cannot read file\n";
    return 2;
  }
  src = *text;
  return 0;
}

int cmd_check(const std::string& path) {
  std::string src;
  if (int rc = load(path, src)) return rc;
  CheckReport rep = check_source(src, path);
  for (const auto& d : rep.diagnostics) std::cerr << format_diagnostic(d) << '\n';
  if (!rep.syntax_ok) return 2;
  return rep.ok ? 0 : 1;
}

int cmd_run(const std::string& path, long max_steps, bool trace,
            const std::string& trace_file) {
  std::string src;
  if (int rc = load(path, src)) return rc;
  ParseResult pr = parse_program(src, path);
  if (!pr.syntax_ok()) {
    for (const auto& d : pr.diagnostics) std::cerr << format_diagnostic(d) << '\n';
    return 2;
  }
  RunOptions opts;
  opts.max_steps = max_steps;
  opts.record_trace = trace;
  RunOutcome oc = run(*pr.program, opts);
  if (trace) {
    if (trace_file.empty()) {
      for (const auto& line : oc.trace) std::cout << line << '\n';
    } else {
      std::ofstream out(trace_file);
      for (const auto& line : oc.trace) out << line << '\n';
    }
  }
  switch (oc.kind) {
    case RunOutcome::Kind::Terminal:
      std::cout << "terminal after " << oc.steps << " steps: " << print_value(oc.result)
                << (oc.protocols_complete ? " (all protocols complete)"
                                          : " (unfinished protocols)")
                << '\n';
      return oc.protocols_complete ? 0 : 1;
    case RunOutcome::Kind::Stuck:
      std::cout << format_runtime_error(oc) << '\n';
      return 1;
    case RunOutcome::Kind::Budget:
      std::cout << "budget exhausted after " << oc.steps << " steps\n";
      return 1;
  }
  return 1;
}

int cmd_verify(const std::string& path, long max_steps, bool wtc_every_step) {
  std::string src;
  if (int rc = load(path, src)) return rc;
  VerifyOptions opts;
  opts.max_steps = max_steps;
  opts.wtc_every_step = wtc_every_step;
  VerifyReport rep = verify_source(src, path, opts);
  for (const auto& d : rep.check.diagnostics) std::cerr << format_diagnostic(d) << '\n';
  if (!rep.check.syntax_ok) return 2;
  if (!rep.check.ok) return 1;
  for (const auto& v : rep.violations) std::cout << "violation: " << v << '\n';
  std::cout << "verified " << rep.outcome.steps << " steps, "
            << rep.violations.size() << " violations, outcome "
            << (rep.outcome.kind == RunOutcome::Kind::Terminal
                    ? "Terminal"
                    : rep.outcome.kind == RunOutcome::Kind::Budget ? "Budget" : "Stuck")
            << '\n';
  return rep.ok() ? 0 : 1;
}

int cmd_corpus(const std::string& dir, long max_steps) {
  CorpusReport rep = run_corpus(dir, max_steps);
  if (rep.entries.empty()) {
    std::cerr << dir << ": error[IOError]: no .mungo files found\n";
    return 2;
  }
  for (const auto& e : rep.entries)
    std::cout << (e.result.pass ? "PASS" : "FAIL") << ' ' << e.path << ": "
              << e.result.detail << '\n';
  return rep.all_pass() ? 0 : 1;
}

int cmd_lts(const std::string& path, const std::string& cls, bool dot) {
  std::string src;
  if (int rc = load(path, src)) return rc;
  ParseResult pr = parse_program(src, path);
  if (!pr.syntax_ok()) {
    for (const auto& d : pr.diagnostics) std::cerr << format_diagnostic(d) << '\n';
    return 2;
  }
  const ClassDecl* decl = pr.program->find_class(cls);
  if (!decl) {
    std::cerr << path << ": error[UnknownClass]: no class " << cls << '\n';
    return 1;
  }
  if (dot) {
    std::cout << usage_dot(decl->usage, cls);
  } else {
    for (const auto& t : usage_transitions(decl->usage))
      std::cout << t.from << " --" << (t.is_label ? "label:" : "call:") << t.name << "--> "
                << t.to << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavioural type checker and interpreter for protocol-annotated classes"};
  app.require_subcommand(1);
  long max_steps = default_max_steps();

  std::string path;
  auto* check = app.add_subcommand("check", "type check a program");
  check->add_option("file", path)->required();

  std::string run_path, trace_file;
  bool trace = false;
  auto* runc = app.add_subcommand("run", "interpret a program");
  runc->add_option("file", run_path)->required();
  runc->add_option("--max-steps", max_steps, "step budget");
  auto* trace_opt = runc->add_option("--trace", trace_file,
                                     "print a step trace, optionally to a file");
  trace_opt->expected(0, 1);

  std::string verify_path;
  bool wtc_every_step = false;
  auto* verify = app.add_subcommand("verify", "run with per-step soundness checks");
  verify->add_option("file", verify_path)->required();
  verify->add_option("--max-steps", max_steps, "step budget");
  verify->add_flag("--wtc-every-step", wtc_every_step,
                   "re-type the configuration after every step");

  std::string corpus_dir;
  auto* corpus = app.add_subcommand("corpus", "evaluate a directory against expectations");
  corpus->add_option("dir", corpus_dir)->required();
  corpus->add_option("--max-steps", max_steps, "step budget");

  std::string lts_path, lts_class;
  bool dot = false;
  auto* lts = app.add_subcommand("lts", "print the protocol automaton of a class");
  lts->add_option("file", lts_path)->required();
  lts->add_option("--class", lts_class, "class name")->required();
  lts->add_flag("--dot", dot, "emit graphviz");

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return cmd_check(path);
  if (runc->parsed()) return cmd_run(run_path, max_steps, trace_opt->count() > 0, trace_file);
  if (verify->parsed()) return cmd_verify(verify_path, max_steps, wtc_every_step);
  if (corpus->parsed()) return cmd_corpus(corpus_dir, max_steps);
  if (lts->parsed()) return cmd_lts(lts_path, lts_class, dot);
  return 2;
}
