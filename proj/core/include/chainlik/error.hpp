#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chainlik {

enum class Errc {
  InvalidArgument,
  NotIrreducible,
  NotAperiodic,
  Singular,
  PathTooShort,
  InvalidSpec,
  OutOfDomain,
  ZeroProbabilityWithPositiveCount,
  OrderMismatch,
  NoConvergence,
  DataDegenerate,
  NoClosedForm,
  SingularInformation,
  SingularP,
  TooManyFailures,
  Parse,
  Config,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace chainlik
