#pragma once

#include <stdexcept>
#include <string>

namespace prodtest {

// A documented size cap was exceeded (tensor too large, too many copies, ...).
// Operations refuse instead of silently approximating.
struct limit_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A construction that is checked against an independent computation failed the
// check (e.g. a far-state certificate the optimizer could not confirm).
struct verification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace prodtest
