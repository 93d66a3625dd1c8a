#include "mungo/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mungo/monitor.hpp"

namespace mungo {

long default_max_steps() {
  if (const char* env = std::getenv("MUNGO_MAX_STEPS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return 100000;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CheckReport check_source(const std::string& src, const std::string& filename) {
  CheckReport out;
  ParseResult pr = parse_program(src, filename);
  out.syntax_ok = pr.syntax_ok();
  out.diagnostics = pr.diagnostics;
  if (!pr.syntax_ok() || !pr.diagnostics.empty()) return out;
  auto diags = type_program(*pr.program);
  out.diagnostics.insert(out.diagnostics.end(), diags.begin(), diags.end());
  out.ok = out.diagnostics.empty();
  return out;
}

VerifyReport verify_program(const Program& prog, VerifyOptions opts) {
  VerifyReport out;
  auto diags = type_program(prog);
  out.check.syntax_ok = true;
  out.check.diagnostics = diags;
  out.check.ok = diags.empty();
  if (!out.check.ok) return out;

  Configuration c = initial_configuration(prog);
  RunOutcome& oc = out.outcome;
  oc.kind = RunOutcome::Kind::Budget;
  auto audit = [&](long n, const Configuration& cfg) {
    if (auto fault = check_error(prog, cfg))
      out.violations.push_back("step " + std::to_string(n) + ": monitor reports " +
                               stuck_kind_name(fault->kind) + ": " + fault->detail);
    std::vector<std::string> why;
    if (!well_formed_configuration(prog, cfg, &why))
      for (const auto& w : why)
        out.violations.push_back("step " + std::to_string(n) + ": ill-formed: " + w);
    why.clear();
    if (!linearity_conserved(prog, cfg, &why))
      for (const auto& w : why)
        out.violations.push_back("step " + std::to_string(n) + ": linearity: " + w);
    if (opts.wtc_every_step)
      for (const auto& d : well_typed_configuration(prog, cfg))
        out.violations.push_back("step " + std::to_string(n) + ": not well typed: " +
                                 std::string(diag_code_name(d.code)) + ": " + d.message);
  };
  audit(0, c);
  for (long n = 1; n <= opts.max_steps; ++n) {
    StepResult r = step(prog, c);
    if (r.kind == StepResult::Kind::Terminal) {
      oc.kind = RunOutcome::Kind::Terminal;
      oc.result = r.result;
      break;
    }
    if (r.kind == StepResult::Kind::Stuck) {
      oc.kind = RunOutcome::Kind::Stuck;
      oc.stuck = r.stuck;
      oc.detail = r.detail;
      out.violations.push_back("step " + std::to_string(n) +
                               ": checked program got stuck: " + r.detail);
      break;
    }
    oc.steps = n;
    for (const auto& rule : r.rules) oc.rules_seen.insert(rule);
    if (opts.record_trace) {
      std::ostringstream line;
      line << "step " << n << ": " << r.rules.back() << " | " << expr_head(c.expr) << " | "
           << r.next.heap.size();
      oc.trace.push_back(line.str());
    }
    c = std::move(r.next);
    audit(n, c);
  }
  oc.final_config = c;
  oc.protocols_complete = true;
  for (const auto& [_, entry] : c.heap)
    if (entry.typestate->usage.body->kind != UsageKind::End) oc.protocols_complete = false;
  if (oc.kind == RunOutcome::Kind::Terminal && !oc.protocols_complete)
    out.violations.push_back("terminal configuration with unfinished protocols");
  return out;
}

VerifyReport verify_source(const std::string& src, const std::string& filename,
                           VerifyOptions opts) {
  ParseResult pr = parse_program(src, filename);
  if (!pr.syntax_ok() || !pr.diagnostics.empty()) {
    VerifyReport out;
    out.check.syntax_ok = pr.syntax_ok();
    out.check.diagnostics = pr.diagnostics;
    return out;
  }
  return verify_program(*pr.program, opts);
}

// ---------------------------------------------------------------------------
// expectations
// ---------------------------------------------------------------------------

std::optional<Expectation> parse_expectation(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  std::istringstream ls(line);
  std::string head;
  ls >> head;
  Expectation exp;
  if (head == "accept") {
    exp.kind = Expectation::Kind::Accept;
    return exp;
  }
  if (head == "reject") {
    exp.kind = Expectation::Kind::Reject;
    std::string rest;
    ls >> rest;
    size_t pos = 0;
    while (pos != std::string::npos && !rest.empty()) {
      size_t comma = rest.find(',', pos);
      std::string code = rest.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (!code.empty()) exp.codes.push_back(code);
      pos = comma == std::string::npos ? comma : comma + 1;
    }
    if (exp.codes.empty()) return std::nullopt;
    return exp;
  }
  if (head == "run") {
    exp.kind = Expectation::Kind::Run;
    ls >> exp.run_outcome;
    if (exp.run_outcome.empty()) return std::nullopt;
    return exp;
  }
  return std::nullopt;
}

static std::string outcome_string(const RunOutcome& oc) {
  switch (oc.kind) {
    case RunOutcome::Kind::Terminal:
      return "Terminal";
    case RunOutcome::Kind::Stuck:
      return std::string("Stuck:") + stuck_kind_name(oc.stuck);
    case RunOutcome::Kind::Budget:
      return "Budget";
  }
  return "?";
}

CaseResult evaluate_case(const std::string& src, const std::string& filename,
                         const Expectation& exp, long max_steps) {
  CaseResult out;
  switch (exp.kind) {
    case Expectation::Kind::Accept: {
      CheckReport rep = check_source(src, filename);
      if (rep.ok) {
        out.pass = true;
        out.detail = "accepted";
      } else {
        out.detail = "expected accept, got " +
                     (rep.diagnostics.empty() ? std::string("failure")
                                              : format_diagnostic(rep.diagnostics.front()));
      }
      return out;
    }
    case Expectation::Kind::Reject: {
      CheckReport rep = check_source(src, filename);
      if (rep.ok) {
        out.detail = "expected reject, program was accepted";
        return out;
      }
      std::set<std::string> got;
      for (const auto& d : rep.diagnostics) got.insert(diag_code_name(d.code));
      for (const auto& want : exp.codes)
        if (!got.count(want)) {
          out.detail = "expected code " + want + ", got " +
                       (rep.diagnostics.empty()
                            ? std::string("nothing")
                            : format_diagnostic(rep.diagnostics.front()));
          return out;
        }
      out.pass = true;
      out.detail = "rejected as expected";
      return out;
    }
    case Expectation::Kind::Run: {
      ParseResult pr = parse_program(src, filename);
      if (!pr.syntax_ok()) {
        out.detail = "parse failed: " + format_diagnostic(pr.diagnostics.front());
        return out;
      }
      RunOptions ro;
      ro.max_steps = max_steps;
      RunOutcome oc = run(*pr.program, ro);
      std::string got = outcome_string(oc);
      if (got == exp.run_outcome) {
        out.pass = true;
        out.detail = got;
      } else {
        out.detail = "expected " + exp.run_outcome + ", got " + got +
                     (oc.detail.empty() ? "" : " (" + oc.detail + ")");
      }
      return out;
    }
  }
  out.detail = "bad expectation";
  return out;
}

CorpusReport run_corpus(const std::string& dir, long max_steps) {
  namespace fs = std::filesystem;
  CorpusReport out;
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& ent : fs::directory_iterator(dir, ec))
    if (ent.is_regular_file() && ent.path().extension() == ".mungo")
      files.push_back(ent.path().string());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    CorpusEntry entry;
    entry.path = path;
    auto src = read_file(path);
    std::string expect_path = fs::path(path).replace_extension(".expect").string();
    auto expect_text = read_file(expect_path);
    if (!src) {
      entry.result.detail = "unreadable source";
    } else if (!expect_text) {
      entry.result.detail = "missing expectation file " + expect_path;
    } else {
      auto exp = parse_expectation(*expect_text);
      if (!exp)
        entry.result.detail = "bad expectation file " + expect_path;
      else
        entry.result = evaluate_case(*src, path, *exp, max_steps);
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

std::string format_runtime_error(const RunOutcome& oc) {
  std::ostringstream os;
  os << "runtime-error: " << stuck_kind_name(oc.stuck);
  const char* tax = stuck_taxonomy(oc.stuck);
  if (*tax) os << " (" << tax << ")";
  os << " at step " << oc.steps << ": " << expr_head(oc.final_config.expr);
  return os.str();
}

}  // namespace mungo
