#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mungo/ast.hpp"

namespace mungo {

// A position in the protocol automaton of one object: the current term plus
// the recursion equations in scope.
using UsageState = Usage;

struct UsageError : std::runtime_error {
  DiagCode code;
  UsageError(DiagCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Unfolds recursion variables until the head is end/top/branch/choice.
// Throws UsageError on unbound variables or non-productive equation cycles.
UsageState resolve_head(const UsageState& s);

// Method transition: defined on (possibly unfolded) branch states.
std::optional<UsageState> step_method(const UsageState& s, const std::string& m);

// Label transition: defined on choice states.
std::optional<UsageState> step_label(const UsageState& s, const std::string& l);

std::vector<std::string> offered_methods(const UsageState& s);
std::vector<std::string> offered_labels(const UsageState& s);

// All states reachable through method and label transitions, canonicalized.
std::vector<UsageState> reachable_states(const UsageState& s);

struct UsageTransition {
  std::string from, to;  // printed canonical states
  bool is_label = false;
  std::string name;  // method or label
};

// Edge list of the reachable sub-automaton, for DOT export and tests.
std::vector<UsageTransition> usage_transitions(const UsageState& s);

// Graphviz rendering of the automaton rooted at the class's declared usage.
std::string usage_dot(const UsageState& s, const std::string& title);

}  // namespace mungo
