#pragma once

#include <stdexcept>
#include <string>

namespace phenocam {

// Every recoverable failure in the library surfaces as this type; the message
// is the user-facing diagnostic (e.g. "degenerate threshold").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phenocam
