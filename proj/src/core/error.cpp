#include "nbv/core/error.hpp"

namespace nbv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::division_degeneracy: return "division-degeneracy";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace nbv
