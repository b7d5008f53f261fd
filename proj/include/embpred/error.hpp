#pragma once

#include <stdexcept>
#include <string>

namespace embpred {

// Exit-code mapping used by the CLI: ValidationError/IoError -> 2, NumericError -> 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace embpred
