#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mungo/ast.hpp"

namespace mungo {

struct HeapEntry {
  // Always a typestate: class, instantiation argument, current usage state.
  TypeExprPtr typestate;
  std::map<std::string, Value> fields;
};

using Heap = std::map<std::string, HeapEntry>;

struct Frame {
  std::string active;  // object whose method is running
  std::string param;
  Value value;
};

struct Configuration {
  Heap heap;
  std::vector<Frame> stack;  // index 0 = outermost caller
  ExprPtr expr;
  int next_obj = 0;
};

// Dynamic type of a value: the current typestate for objects.
TypeExprPtr get_type(const Value& v, const Heap& h, const Program& prog);
// A value is linear while it refers to an object whose protocol is unfinished.
bool lin_value(const Value& v, const Heap& h);

// Fresh Main object plus its main body; the entry protocol is consumed
// up front.
Configuration initial_configuration(const Program& prog);

enum class StuckKind {
  NullCall1,            // call through a null field
  NullCall2,            // call through a null parameter
  MthdNotAv1,           // field receiver's protocol refuses the method
  MthdNotAv2,           // parameter receiver's protocol refuses the method
  FldErr,               // field absent from the object
  MethodNotUnderstood,  // method not in the class at all
  FieldMisused,         // overwriting a live field
  ParameterMisused,     // discarding a live parameter on return
  LinearDrop,           // sequencing away a live value
  LabelNotAvailable,    // switch label refused by the protocol
  TypeError,            // value of the wrong shape for the rule
  DanglingContinue,
  NoRule,
};

const char* stuck_kind_name(StuckKind k);
const char* stuck_taxonomy(StuckKind k);

struct StepResult {
  enum class Kind { Stepped, Terminal, Stuck };
  Kind kind = Kind::Stuck;
  Configuration next;                    // Stepped
  Value result;                          // Terminal
  StuckKind stuck = StuckKind::NoRule;   // Stuck
  std::string detail;
  // Rules applied, outermost composite first, the firing rule last.
  std::vector<std::string> rules;
};

StepResult step(const Program& prog, const Configuration& c);

struct RunOptions {
  long max_steps = 100000;
  bool record_trace = false;
};

struct RunOutcome {
  enum class Kind { Terminal, Stuck, Budget };
  Kind kind = Kind::Budget;
  Value result;
  StuckKind stuck = StuckKind::NoRule;
  std::string detail;
  long steps = 0;
  bool protocols_complete = false;  // every heap usage reached end
  std::vector<std::string> trace;   // "step N: rule | expr-head | heap-size"
  std::set<std::string> rules_seen;
  Configuration final_config;
};

RunOutcome run(const Program& prog, RunOptions opts = {});

// Structural invariants of a configuration: stack depth matches the return
// spine, references resolve, object occurrences are unique, heap entries
// match their declarations with reachable usage states.
bool well_formed_configuration(const Program& prog, const Configuration& c,
                               std::vector<std::string>* why = nullptr);

// Every live (linear) object is held in exactly one place.
bool linearity_conserved(const Program& prog, const Configuration& c,
                         std::vector<std::string>* why = nullptr);

std::string print_configuration(const Configuration& c);

}  // namespace mungo
