#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mungo/interp.hpp"
#include "mungo/parser.hpp"
#include "mungo/typecheck.hpp"

namespace mungo {

long default_max_steps();  // 100000, overridable through MUNGO_MAX_STEPS

std::optional<std::string> read_file(const std::string& path);

// ---------------------------------------------------------------------------
// check / run / verify pipelines
// ---------------------------------------------------------------------------

struct CheckReport {
  bool syntax_ok = false;
  bool ok = false;
  std::vector<Diagnostic> diagnostics;
};

CheckReport check_source(const std::string& src, const std::string& filename);

struct VerifyOptions {
  long max_steps = 100000;
  bool wtc_every_step = false;
  bool record_trace = false;
};

struct VerifyReport {
  CheckReport check;
  RunOutcome outcome;
  // soundness violations observed while stepping, prefixed "step N:"
  std::vector<std::string> violations;

  bool ok() const {
    return check.ok && violations.empty() &&
           (outcome.kind == RunOutcome::Kind::Terminal && outcome.protocols_complete);
  }
};

VerifyReport verify_program(const Program& prog, VerifyOptions opts);
VerifyReport verify_source(const std::string& src, const std::string& filename,
                           VerifyOptions opts);

// ---------------------------------------------------------------------------
// expectation sidecars
// ---------------------------------------------------------------------------

struct Expectation {
  enum class Kind { Accept, Reject, Run };
  Kind kind = Kind::Accept;
  std::vector<std::string> codes;  // Reject
  std::string run_outcome;         // Run: "Terminal", "Stuck:<kind>" or "Budget"
};

std::optional<Expectation> parse_expectation(const std::string& text);

struct CaseResult {
  bool pass = false;
  std::string detail;
};

CaseResult evaluate_case(const std::string& src, const std::string& filename,
                         const Expectation& exp, long max_steps);

struct CorpusEntry {
  std::string path;
  CaseResult result;
};

struct CorpusReport {
  std::vector<CorpusEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.result.pass) return false;
    return !entries.empty();
  }
};

CorpusReport run_corpus(const std::string& dir, long max_steps);

// "runtime-error: <kind> (<taxonomy>) at step N: <expression excerpt>"
std::string format_runtime_error(const RunOutcome& outcome);

}  // namespace mungo
