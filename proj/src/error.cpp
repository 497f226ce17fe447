#include "onionpath/error.hpp"

namespace onionpath {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::invalid_pmf: return "invalid pmf";
    case Errc::degenerate_network: return "degenerate network";
    case Errc::empty_country: return "empty country";
    case Errc::lb_undefined: return "LB undefined";
    case Errc::instance_too_large: return "instance too large";
    case Errc::unknown_vertex: return "unknown vertex";
    case Errc::zero_elapsed_time: return "zero elapsed time";
    case Errc::time_regression: return "time regression";
    case Errc::insufficient_nodes: return "insufficient nodes";
    case Errc::country_too_small: return "country too small";
    case Errc::inconsistent_spec: return "inconsistent spec";
    case Errc::overflow: return "overflow";
    case Errc::io_error: return "I/O error";
    case Errc::parse_error: return "parse error";
  }
  return "unknown error";
}

}  // namespace onionpath
