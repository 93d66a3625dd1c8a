// Python bindings for the main pipeline operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mungo/harness.hpp"

namespace py = pybind11;
using namespace mungo;

namespace {

py::list diag_list(const std::vector<Diagnostic>& diags) {
  py::list out;
  for (const auto& d : diags) {
    py::dict item;
    item["code"] = diag_code_name(d.code);
    item["message"] = d.message;
    item["line"] = d.span.start_line;
    item["col"] = d.span.start_col;
    item["text"] = format_diagnostic(d);
    out.append(item);
  }
  return out;
}

std::string outcome_name(RunOutcome::Kind k) {
  switch (k) {
    case RunOutcome::Kind::Terminal: return "terminal";
    case RunOutcome::Kind::Stuck: return "stuck";
    case RunOutcome::Kind::Budget: return "budget";
  }
  return "?";
}

py::dict check_py(const std::string& source, const std::string& filename) {
  CheckReport rep = check_source(source, filename);
  py::dict out;
  out["ok"] = rep.ok;
  out["syntax_ok"] = rep.syntax_ok;
  out["diagnostics"] = diag_list(rep.diagnostics);
  return out;
}

py::dict run_py(const std::string& source, const std::string& filename, long max_steps) {
  ParseResult pr = parse_program(source, filename);
  py::dict out;
  if (!pr.syntax_ok()) {
    out["outcome"] = "parse-error";
    out["diagnostics"] = diag_list(pr.diagnostics);
    return out;
  }
  RunOptions opts;
  opts.max_steps = max_steps;
  RunOutcome oc = run(*pr.program, opts);
  out["outcome"] = outcome_name(oc.kind);
  out["steps"] = oc.steps;
  out["protocols_complete"] = oc.protocols_complete;
  if (oc.kind == RunOutcome::Kind::Terminal) out["result"] = print_value(oc.result);
  if (oc.kind == RunOutcome::Kind::Stuck) {
    out["stuck"] = stuck_kind_name(oc.stuck);
    out["error"] = format_runtime_error(oc);
  }
  return out;
}

py::dict verify_py(const std::string& source, const std::string& filename,
                   long max_steps, bool wtc_every_step) {
  VerifyOptions opts;
  opts.max_steps = max_steps;
  opts.wtc_every_step = wtc_every_step;
  VerifyReport rep = verify_source(source, filename, opts);
  py::dict out;
  out["ok"] = rep.ok();
  out["check_ok"] = rep.check.ok;
  out["diagnostics"] = diag_list(rep.check.diagnostics);
  out["violations"] = rep.violations;
  out["outcome"] = outcome_name(rep.outcome.kind);
  out["steps"] = rep.outcome.steps;
  return out;
}

std::string reprint_py(const std::string& source, const std::string& filename) {
  ParseResult pr = parse_program(source, filename);
  if (!pr.syntax_ok())
    throw py::value_error(pr.diagnostics.empty() ? "parse error"
                                                 : format_diagnostic(pr.diagnostics.front()));
  return print_program(*pr.program);
}

}  // namespace

PYBIND11_MODULE(_mungo, m) {
  m.doc() = "behavioural type checker and interpreter for protocol-annotated classes";
  m.def("check", &check_py, py::arg("source"), py::arg("filename") = "<input>",
        "Parse and type check a program; returns ok/syntax_ok/diagnostics.");
  m.def("run", &run_py, py::arg("source"), py::arg("filename") = "<input>",
        py::arg("max_steps") = 100000,
        "Interpret a program; returns the outcome and step count.");
  m.def("verify", &verify_py, py::arg("source"), py::arg("filename") = "<input>",
        py::arg("max_steps") = 100000, py::arg("wtc_every_step") = false,
        "Run with per-step soundness auditing; returns violations found.");
  m.def("reprint", &reprint_py, py::arg("source"), py::arg("filename") = "<input>",
        "Parse and pretty-print back to canonical source.");
}
