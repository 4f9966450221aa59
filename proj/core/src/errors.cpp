#include "roledyn/errors.hpp"

namespace roledyn {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Argument:
      return 1;
    case ErrorKind::Numerical:
      return 3;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Schema:
    case ErrorKind::Definition:
    case ErrorKind::Lookup:
    case ErrorKind::InsufficientData:
      return 2;
  }
  return 2;
}

}  // namespace roledyn
