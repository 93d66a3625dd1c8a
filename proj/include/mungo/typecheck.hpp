#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mungo/ast.hpp"
#include "mungo/interp.hpp"
#include "mungo/usage.hpp"

namespace mungo {

using FieldTypeEnv = std::map<std::string, TypeExprPtr>;

bool field_env_equal(const FieldTypeEnv& a, const FieldTypeEnv& b);
bool terminated_env(const FieldTypeEnv& env);
std::string print_field_env(const FieldTypeEnv& env);

struct LambdaEntry {
  ClassView cls;
  FieldTypeEnv fields;
};

using Lambda = std::map<std::string, LambdaEntry>;
using EnvO = std::map<std::string, TypeExprPtr>;

struct TypeFrame {
  std::string active;
  std::string param;
  TypeExprPtr binding;
};

struct TypingState {
  Lambda lambda;
  EnvO env_o;
  std::vector<TypeFrame> stack;  // index 0 = outermost
};

bool typing_state_equal(const TypingState& a, const TypingState& b);

struct CheckError : std::runtime_error {
  Diagnostic diag;
  explicit CheckError(Diagnostic d) : std::runtime_error(d.message), diag(std::move(d)) {}
};

struct ExprTyping {
  // True when every path through the expression loops; type and state are
  // then unconstrained.
  bool divergent = false;
  TypeExprPtr type;
  TypingState state;
};

// Types one expression; throws CheckError on failure.
ExprTyping type_expression(const Program& prog, const TypingState& st, const ExprPtr& e);

// Walks a usage state, checking each reachable method body from the field
// typing it will run under. Returns the field typing after protocol
// completion, or nullopt when every path loops back into the recursion.
// `trace` records the rule applied at each usage node, in visit order:
// TCBr, TCCh, TCEn, TCVar, TCRec.
std::optional<FieldTypeEnv> type_class_usage(const Program& prog, const ClassView& view,
                                             const UsageState& state,
                                             const FieldTypeEnv& fields,
                                             std::vector<std::string>* trace = nullptr);

struct ClassCheckResult {
  bool ok = false;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> rule_trace;
};

ClassCheckResult type_class(const Program& prog, const ClassDecl& decl);

std::vector<Diagnostic> type_program(const Program& prog);

// The five-premise configuration judgment: heap, stacks, expression and
// per-object protocol completion, with the typing environments rebuilt
// from the heap. Empty result means the configuration is well-typed.
std::vector<Diagnostic> well_typed_configuration(const Program& prog, const Configuration& c);

}  // namespace mungo
