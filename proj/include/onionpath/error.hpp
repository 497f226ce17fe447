#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace onionpath {

enum class Errc {
  invalid_argument,
  invalid_pmf,
  degenerate_network,
  empty_country,
  lb_undefined,
  instance_too_large,
  unknown_vertex,
  zero_elapsed_time,
  time_regression,
  insufficient_nodes,
  country_too_small,
  inconsistent_spec,
  overflow,
  io_error,
  parse_error,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can branch on the kind of error instead of the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace onionpath
