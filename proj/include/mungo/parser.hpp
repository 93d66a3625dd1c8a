#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mungo/ast.hpp"
#include "mungo/diagnostics.hpp"

namespace mungo {

struct ParseResult {
  // Present whenever the input was syntactically parseable; semantic
  // validation failures still leave the tree available.
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool syntax_ok() const { return program.has_value(); }
  bool ok() const { return program.has_value() && diagnostics.empty(); }
};

ParseResult parse_program(const std::string& source, const std::string& filename = "<input>");

// Canonical source rendering; parse_program(print_program(p)) reproduces p.
std::string print_program(const Program& p);

}  // namespace mungo
