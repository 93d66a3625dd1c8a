#pragma once

#include <optional>
#include <string>

#include "mungo/interp.hpp"

namespace mungo {

// A fault the run-time monitor can observe in a configuration before the
// failing step is attempted.
struct RuntimeFault {
  StuckKind kind = StuckKind::NoRule;  // NullCall1/2, MthdNotAv1/2 or FldErr
  std::string taxonomy;
  std::string detail;
};

// Scans the active position of the expression for a null dereference,
// refused method, or missing field.
std::optional<RuntimeFault> check_error(const Program& prog, const Configuration& c);

}  // namespace mungo
