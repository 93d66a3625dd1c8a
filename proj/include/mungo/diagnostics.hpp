#pragma once

#include <string>
#include <vector>

namespace mungo {

struct SourceSpan {
  std::string file;
  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;
};

enum class Severity { Error, Warning, Note };

enum class DiagCode {
  // parse-level
  SyntaxError,
  DuplicateName,
  UndeclaredName,
  EnumTypedField,
  EmptyEnum,
  EmptyBranch,
  MissingMainClass,
  UnboundUsageVariable,
  // checker-level, protocol taxonomy
  MethodNotUnderstood,
  FieldNotUnderstood,
  MethodNotAvailable,
  FieldNotAvailable,
  ParameterNotAvailable,
  FieldMisused,
  ParameterMisused,
  // checker-level, structural
  BranchMismatch,
  LoopEnvMismatch,
  SwitchLabelMismatch,
  NonTerminatedAfterUsage,
  RecursionEnvMismatch,
  TypeMismatch,
  LinearValueDropped,
  // class information
  UnknownClass,
  ArityMismatch,
  UnfoldCycle,
  // configuration checking
  WTHViolation,
  WTPViolation,
  WTEViolation,
  WTDViolation,
  WTCViolation,
  // harness
  IOError,
};

const char* diag_code_name(DiagCode code);

// The user-facing fault category a diagnostic belongs to, when it has one
// (method/field/parameter not understood / not available / misused).
const char* diag_taxonomy(DiagCode code);

struct Diagnostic {
  Severity severity = Severity::Error;
  DiagCode code = DiagCode::SyntaxError;
  std::string message;
  SourceSpan span;
  std::vector<std::string> notes;
};

// "file:line:col: severity[code]: message"
std::string format_diagnostic(const Diagnostic& d);

// Deterministic report order: by span, then code.
void sort_diagnostics(std::vector<Diagnostic>& diags);

}  // namespace mungo
